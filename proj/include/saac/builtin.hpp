#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "saac/world.hpp"

// Built-in unit reflexes that drive evader units nobody has commanded.
// Both are pure functions of the world snapshot.
namespace saac::builtin {

struct UnitOrder {
  int id = 0;
  Order order;
  friend bool operator==(const UnitOrder&, const UnitOrder&) = default;
};

/// Zerglings hold until a pursuer comes within their sight, then run at the
/// nearest one and keep chasing it.
inline std::vector<UnitOrder> zergling_orders(const WorldState& world) {
  std::vector<UnitOrder> out;
  for (const Unit& e : world.units) {
    if (!e.alive || e.team != Team::evader) continue;
    const Unit* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const Unit& p : world.units) {
      if (!p.alive || p.team != Team::pursuer) continue;
      const double d = distance(e.pos, p.pos);
      if (d <= e.stats->sight && d < best) {
        best = d;
        nearest = &p;
      }
    }
    out.push_back({e.id, nearest ? Order::attack_unit(nearest->id, nearest->pos) : Order::hold()});
  }
  return out;
}

/// Removes the outward components of `dir` for a unit resting on the domain
/// boundary. A unit pinned in a corner with no tangential component left
/// slides along the wall where the threat is least aligned.
inline Vec2 project_on_walls(Vec2 pos, Vec2 dir, const GameDomain& domain) {
  constexpr double eps = 1e-9;
  const bool at_left = pos.x <= eps, at_right = pos.x >= domain.width() - eps;
  const bool at_top = pos.y <= eps, at_bottom = pos.y >= domain.height() - eps;
  Vec2 out = dir;
  bool blocked_x = false, blocked_y = false;
  if ((at_left && out.x < 0.0) || (at_right && out.x > 0.0)) {
    out.x = 0.0;
    blocked_x = true;
  }
  if ((at_top && out.y < 0.0) || (at_bottom && out.y > 0.0)) {
    out.y = 0.0;
    blocked_y = true;
  }
  if (out.norm() > 1e-12) return out * (1.0 / out.norm());
  if (blocked_x && blocked_y) {
    // Cornered: move along the axis on which the threat is less aligned.
    if (std::abs(dir.x) >= std::abs(dir.y)) return {0.0, at_top ? 1.0 : -1.0};
    return {at_left ? 1.0 : -1.0, 0.0};
  }
  return {};
}

/// Drones hold until a pursuer is within their sight, then run at full speed
/// directly away from the centroid of the pursuers they can see, sliding along
/// walls when pinned.
inline std::vector<UnitOrder> drone_orders(const WorldState& world) {
  std::vector<UnitOrder> out;
  for (const Unit& e : world.units) {
    if (!e.alive || e.team != Team::evader) continue;
    Vec2 sum{};
    int seen = 0;
    for (const Unit& p : world.units) {
      if (p.alive && p.team == Team::pursuer && distance(e.pos, p.pos) <= e.stats->sight) {
        sum = sum + p.pos;
        ++seen;
      }
    }
    if (seen == 0) {
      out.push_back({e.id, Order::hold()});
      continue;
    }
    const Vec2 centroid = sum * (1.0 / seen);
    Vec2 away = e.pos - centroid;
    if (away.norm() < 1e-12) {
      // Threat exactly on top: flee toward the domain interior.
      away = Vec2{world.domain.width() / 2, world.domain.height() / 2} - e.pos;
      if (away.norm() < 1e-12) away = {0.0, 1.0};
    }
    away = away * (1.0 / away.norm());
    const Vec2 dir = project_on_walls(e.pos, away, world.domain);
    if (dir.norm() < 1e-12) {
      out.push_back({e.id, Order::hold()});
      continue;
    }
    // One second of travel ahead; re-evaluated every tick.
    out.push_back({e.id, Order::move_to(e.pos + dir * e.stats->speed)});
  }
  return out;
}

}  // namespace saac::builtin
