#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "saac/geometry.hpp"
#include "saac/rng.hpp"
#include "saac/units.hpp"

namespace saac {

enum class Team : std::uint8_t { pursuer, evader };

constexpr Team opponent(Team t) { return t == Team::pursuer ? Team::evader : Team::pursuer; }

struct Order {
  enum class Kind : std::uint8_t { hold, move, attack_move };

  Kind kind = Kind::hold;
  Vec2 waypoint{};
  // When set the waypoint tracks this unit's position every tick.
  std::optional<int> follow;

  static Order hold() { return {}; }
  static Order move_to(Vec2 p) { return {Kind::move, p, std::nullopt}; }
  static Order attack_move_to(Vec2 p) { return {Kind::attack_move, p, std::nullopt}; }
  static Order attack_unit(int id, Vec2 last_known) { return {Kind::attack_move, last_known, id}; }

  friend bool operator==(const Order&, const Order&) = default;
};

struct Unit {
  int id = 0;
  Team team = Team::pursuer;
  const UnitStats* stats = nullptr;
  Vec2 pos{};
  double health = 0.0;
  bool alive = true;
  Order order{};
  // True while the order came from an agent action; built-in reflexes only
  // drive units without a commanded order.
  bool commanded = false;

  friend bool operator==(const Unit& a, const Unit& b) {
    return a.id == b.id && a.team == b.team && *a.stats == *b.stats && a.pos == b.pos &&
           a.health == b.health && a.alive == b.alive && a.order == b.order &&
           a.commanded == b.commanded;
  }
};

struct DamageEvent {
  int attacker = 0;
  int target = 0;
  double amount = 0.0;
  friend bool operator==(const DamageEvent&, const DamageEvent&) = default;
};

struct WorldState {
  GameDomain domain;
  std::vector<Unit> units;  // ascending id
  std::int64_t tick = 0;
  double clock = 0.0;  // seconds
  Rng rng;
  std::int64_t kills = 0;
  std::int64_t evaders_spawned = 0;
  int next_id = 1;

  int spawn(Team team, const UnitStats& stats, Vec2 pos) {
    Unit u;
    u.id = next_id++;
    u.team = team;
    u.stats = &stats;
    u.pos = domain.clamp(pos);
    u.health = stats.health_max;
    units.push_back(u);
    if (team == Team::evader) ++evaders_spawned;
    return u.id;
  }

  Unit* find(int id) {
    auto it = std::lower_bound(units.begin(), units.end(), id,
                               [](const Unit& u, int v) { return u.id < v; });
    return it != units.end() && it->id == id ? &*it : nullptr;
  }
  const Unit* find(int id) const { return const_cast<WorldState*>(this)->find(id); }

  int alive_count(Team team) const {
    return static_cast<int>(std::count_if(units.begin(), units.end(), [team](const Unit& u) {
      return u.alive && u.team == team;
    }));
  }

  // Called once per tick after combat, so ids stay valid for that tick's events.
  void prune_dead() {
    std::erase_if(units, [](const Unit& u) { return !u.alive; });
  }

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

/// Enemy ids seen by `team`: alive enemies within sight of at least one alive
/// unit of `team`. Returned in ascending id order.
inline std::vector<int> visible_enemies(Team team, const WorldState& world) {
  std::vector<int> out;
  for (const Unit& e : world.units) {
    if (!e.alive || e.team == team) continue;
    for (const Unit& u : world.units) {
      if (u.alive && u.team == team && distance(u.pos, e.pos) <= u.stats->sight) {
        out.push_back(e.id);
        break;
      }
    }
  }
  return out;
}

/// Position after moving toward the order's waypoint for dt seconds at the
/// unit's speed. Arrival is exact; the result is clamped into the domain.
inline Vec2 advance_unit(const Unit& unit, double dt, const GameDomain& domain) {
  if (unit.order.kind == Order::Kind::hold) return unit.pos;
  const Vec2 delta = unit.order.waypoint - unit.pos;
  const double dist = delta.norm();
  const double reach = unit.stats->speed * dt;
  if (dist <= reach) return domain.clamp(unit.order.waypoint);
  return domain.clamp(unit.pos + delta * (reach / dist));
}

/// One tick of continuous-rate combat. Every alive unit under an attack-move
/// order fires at the nearest enemy that is visible to its team and within
/// its attack range (ties go to the lower id). Targets and damage are taken
/// from the pre-tick state; deaths are applied afterwards.
inline std::vector<DamageEvent> resolve_combat(WorldState& world, double dt) {
  const std::vector<int> seen_by_pursuers = visible_enemies(Team::pursuer, world);
  const std::vector<int> seen_by_evaders = visible_enemies(Team::evader, world);

  std::vector<DamageEvent> events;
  for (const Unit& u : world.units) {
    if (!u.alive || u.order.kind != Order::Kind::attack_move) continue;
    const auto& seen = u.team == Team::pursuer ? seen_by_pursuers : seen_by_evaders;
    const Unit* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int id : seen) {
      const Unit* e = world.find(id);
      const double d = distance(u.pos, e->pos);
      if (d <= u.stats->attack_range && d < best_dist) {  // ascending ids: strict < keeps lowest
        best = e;
        best_dist = d;
      }
    }
    if (best) events.push_back({u.id, best->id, u.stats->dps * dt});
  }

  for (const DamageEvent& ev : events) {
    Unit* t = world.find(ev.target);
    t->health -= ev.amount;
  }
  for (Unit& u : world.units) {
    if (u.alive && u.health <= 0.0) {
      u.health = 0.0;
      u.alive = false;
      if (u.team == Team::evader) ++world.kills;
    }
  }
  return events;
}

/// Moves every alive unit one tick. Units with fixed waypoints move first;
/// units following another unit then head for that unit's updated position.
/// Firing does not interrupt movement.
inline void advance_all(WorldState& world, double dt) {
  for (Unit& u : world.units) {
    if (!u.alive || u.order.follow) continue;
    u.pos = advance_unit(u, dt, world.domain);
    if (u.order.kind == Order::Kind::move && u.pos == world.domain.clamp(u.order.waypoint)) {
      u.order = Order::hold();
      u.commanded = false;
    }
  }
  for (Unit& u : world.units) {
    if (!u.alive || !u.order.follow) continue;
    const Unit* target = world.find(*u.order.follow);
    if (!target || !target->alive) {
      u.order = Order::hold();
      continue;
    }
    u.order.waypoint = target->pos;
    u.pos = advance_unit(u, dt, world.domain);
  }
}

}  // namespace saac
