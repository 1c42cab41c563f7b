#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "saac/builtin.hpp"
#include "saac/geometry.hpp"
#include "saac/units.hpp"
#include "saac/world.hpp"

namespace saac {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class MapId : std::uint8_t { find_and_defeat_zerglings, find_and_defeat_drones };

inline std::string_view to_string(MapId m) {
  return m == MapId::find_and_defeat_zerglings ? "find_and_defeat_zerglings"
                                               : "find_and_defeat_drones";
}

// Accepts both `find_and_defeat_drones` and `find-and-defeat-drones`, plus the
// short forms `zerglings` / `drones`.
inline MapId parse_map_id(std::string_view s) {
  std::string norm(s);
  for (char& c : norm) {
    if (c == '-') c = '_';
  }
  if (norm == "find_and_defeat_zerglings" || norm == "zerglings") return MapId::find_and_defeat_zerglings;
  if (norm == "find_and_defeat_drones" || norm == "drones") return MapId::find_and_defeat_drones;
  throw std::invalid_argument("unknown map id: " + std::string(s));
}

struct EpisodeConfig {
  MapId map_id = MapId::find_and_defeat_zerglings;
  GameDomain domain{32.0, 32.0};
  int num_pursuers = 3;
  int num_evaders = 25;
  std::string pursuer_type = "marine";
  std::string evader_type = "zergling";
  double final_time = 180.0;  // seconds
  double tick = 0.125;        // seconds
  int decision_period = 2;    // ticks per decision step
  int camera_width = 16;
  int camera_height = 16;
  std::uint64_t seed = 0;

  static EpisodeConfig defaults_for(MapId map) {
    EpisodeConfig c;
    c.map_id = map;
    if (map == MapId::find_and_defeat_drones) {
      c.pursuer_type = "void_ray";
      c.evader_type = "drone";
    }
    return c;
  }

  double decision_seconds() const { return tick * decision_period; }

  // Number of ticks after which the episode is out of time.
  std::int64_t final_tick() const { return static_cast<std::int64_t>(std::ceil(final_time / tick - 1e-9)); }

  // Throws std::invalid_argument naming the first offending field.
  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid episode config: " + what); };
    if (domain.width() != std::floor(domain.width()) || domain.height() != std::floor(domain.height()))
      fail("domain extents must be whole cells");
    if (!(final_time > 0.0) || !std::isfinite(final_time)) fail("T_f must be positive");
    if (!(tick > 0.0) || !std::isfinite(tick)) fail("tick must be positive");
    if (decision_period < 1) fail("decision_period must be >= 1");
    if (num_pursuers < 1) fail("N_p must be >= 1");
    if (num_evaders < 1) fail("N_e must be >= 1");
    if (camera_width < 1 || camera_height < 1) fail("camera_size must be >= 1");
    if (camera_width > domain.cells_x() || camera_height > domain.cells_y())
      fail("camera_size exceeds domain extents");
    units::by_name(pursuer_type);
    units::by_name(evader_type);
  }

  friend bool operator==(const EpisodeConfig&, const EpisodeConfig&) = default;
};

// JSON keys mirror the config fields; missing keys keep the map's defaults.
inline nlohmann::ordered_json to_json(const EpisodeConfig& c) {
  nlohmann::ordered_json j;
  j["map_id"] = std::string(to_string(c.map_id));
  j["domain"] = {{"l_x", c.domain.width()}, {"l_y", c.domain.height()}};
  j["N_p"] = c.num_pursuers;
  j["N_e"] = c.num_evaders;
  j["pursuer_type"] = c.pursuer_type;
  j["evader_type"] = c.evader_type;
  j["T_f"] = c.final_time;
  j["tick"] = c.tick;
  j["decision_period"] = c.decision_period;
  j["camera_size"] = {{"x", c.camera_width}, {"y", c.camera_height}};
  j["seed"] = c.seed;
  return j;
}

template <class Json>
EpisodeConfig config_from_json(const Json& j, std::optional<EpisodeConfig> base = std::nullopt) {
  if (!j.is_object()) throw std::invalid_argument("episode config must be a JSON object");
  static const char* known[] = {"map_id", "domain", "N_p", "N_e", "pursuer_type", "evader_type",
                                "T_f", "tick", "decision_period", "camera_size", "seed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
        std::end(known))
      throw std::invalid_argument("unknown episode config key: " + it.key());
  }
  EpisodeConfig c = base.value_or(EpisodeConfig{});
  try {
    if (j.contains("map_id")) {
      const MapId m = parse_map_id(j.at("map_id").template get<std::string>());
      if (!base || base->map_id != m) c = EpisodeConfig::defaults_for(m);
    }
    if (j.contains("domain")) {
      const auto& d = j.at("domain");
      c.domain = GameDomain(d.at("l_x").template get<double>(), d.at("l_y").template get<double>());
    }
    if (j.contains("N_p")) c.num_pursuers = j.at("N_p").template get<int>();
    if (j.contains("N_e")) c.num_evaders = j.at("N_e").template get<int>();
    if (j.contains("pursuer_type")) c.pursuer_type = j.at("pursuer_type").template get<std::string>();
    if (j.contains("evader_type")) c.evader_type = j.at("evader_type").template get<std::string>();
    if (j.contains("T_f")) c.final_time = j.at("T_f").template get<double>();
    if (j.contains("tick")) c.tick = j.at("tick").template get<double>();
    if (j.contains("decision_period")) c.decision_period = j.at("decision_period").template get<int>();
    if (j.contains("camera_size")) {
      c.camera_width = j.at("camera_size").at("x").template get<int>();
      c.camera_height = j.at("camera_size").at("y").template get<int>();
    }
    if (j.contains("seed")) c.seed = j.at("seed").template get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed episode config: ") + e.what());
  }
  c.validate();
  return c;
}

/// l_x * l_y coordinate choices plus the four argument-free commands.
inline std::int64_t action_space_size(const EpisodeConfig& c) {
  return static_cast<std::int64_t>(c.domain.cells_x()) * c.domain.cells_y() + 4;
}

/// Observed capture time t_f / score. A score of zero means nothing was
/// captured and maps to +infinity.
inline double empirical_capture_time(std::int64_t score, double t_f) {
  if (score < 0 || t_f < 0.0) throw std::invalid_argument("capture time inputs must be non-negative");
  if (score == 0) return std::numeric_limits<double>::infinity();
  return t_f / static_cast<double>(score);
}

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

enum class ActionType : std::uint8_t { no_op, select_army, move_camera, attack_screen, move_minimap };

inline std::string_view to_string(ActionType t) {
  switch (t) {
    case ActionType::no_op: return "no_op";
    case ActionType::select_army: return "select_army";
    case ActionType::move_camera: return "move_camera";
    case ActionType::attack_screen: return "attack_screen";
    case ActionType::move_minimap: return "move_minimap";
  }
  return "no_op";
}

inline std::optional<ActionType> parse_action_type(std::string_view s) {
  for (auto t : {ActionType::no_op, ActionType::select_army, ActionType::move_camera,
                 ActionType::attack_screen, ActionType::move_minimap}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

constexpr bool takes_coordinates(ActionType t) {
  return t == ActionType::move_camera || t == ActionType::attack_screen || t == ActionType::move_minimap;
}

// Pursuers: select_army, move_camera, attack_screen, no_op.
// Evaders: select_army, move_minimap, no_op.
constexpr bool allowed_for(Team team, ActionType t) {
  switch (t) {
    case ActionType::no_op:
    case ActionType::select_army: return true;
    case ActionType::move_camera:
    case ActionType::attack_screen: return team == Team::pursuer;
    case ActionType::move_minimap: return team == Team::evader;
  }
  return false;
}

struct Action {
  ActionType type = ActionType::no_op;
  int x = 0;
  int y = 0;

  static Action no_op() { return {}; }
  static Action select_army() { return {ActionType::select_army, 0, 0}; }
  static Action move_camera(Cell c) { return {ActionType::move_camera, c.x, c.y}; }
  static Action attack_screen(Cell c) { return {ActionType::attack_screen, c.x, c.y}; }
  static Action move_minimap(Cell c) { return {ActionType::move_minimap, c.x, c.y}; }

  friend bool operator==(const Action& a, const Action& b) {
    return a.type == b.type && (!takes_coordinates(a.type) || (a.x == b.x && a.y == b.y));
  }
};

inline std::string describe(const Action& a) {
  std::string s(to_string(a.type));
  if (takes_coordinates(a.type)) s += "(" + std::to_string(a.x) + "," + std::to_string(a.y) + ")";
  return s;
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

struct Grid {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> data;  // row-major, y then x

  Grid() = default;
  Grid(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  std::int32_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::int32_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  int nonzero_count() const {
    return static_cast<int>(std::count_if(data.begin(), data.end(), [](std::int32_t v) { return v != 0; }));
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct FeatureLayers {
  Grid fog;    // 1 where the team currently has vision
  Grid own;    // count of own alive units per cell
  Grid enemy;  // count of visible enemy units per cell
  friend bool operator==(const FeatureLayers&, const FeatureLayers&) = default;
};

struct Scalars {
  double clock = 0.0;
  std::int64_t kills = 0;
  int own_alive = 0;
  int enemy_alive = 0;
  int step = 0;
  Cell camera{};
  bool selected = false;
  friend bool operator==(const Scalars&, const Scalars&) = default;
};

struct Observation {
  Team team = Team::pursuer;
  FeatureLayers minimap;
  FeatureLayers screen;
  Scalars scalars;
  std::vector<std::string> available_actions;
  friend bool operator==(const Observation&, const Observation&) = default;
};

struct CameraView {
  Cell origin{};
  int width = 16;
  int height = 16;

  bool contains(Cell c) const {
    return c.x >= origin.x && c.y >= origin.y && c.x < origin.x + width && c.y < origin.y + height;
  }
};

inline std::vector<std::string> available_actions(Team team, bool selected) {
  std::vector<std::string> out{"no_op", "select_army"};
  if (team == Team::pursuer) {
    out.emplace_back("move_camera");
    if (selected) out.emplace_back("attack_screen");
  } else if (selected) {
    out.emplace_back("move_minimap");
  }
  return out;
}

/// Fog-filtered feature layers for one team: full-map minimap plus the
/// camera window crop.
inline Observation render_observation(const WorldState& world, Team team, const CameraView& camera,
                                      bool selected, int step = 0) {
  const GameDomain& dom = world.domain;
  Observation obs;
  obs.team = team;
  obs.minimap = {Grid(dom.cells_x(), dom.cells_y()), Grid(dom.cells_x(), dom.cells_y()),
                 Grid(dom.cells_x(), dom.cells_y())};

  std::vector<const Unit*> own;
  for (const Unit& u : world.units) {
    if (u.alive && u.team == team) own.push_back(&u);
  }
  for (int y = 0; y < dom.cells_y(); ++y) {
    for (int x = 0; x < dom.cells_x(); ++x) {
      const Vec2 c = cell_center({x, y});
      for (const Unit* u : own) {
        if (distance(u->pos, c) <= u->stats->sight) {
          obs.minimap.fog.at(x, y) = 1;
          break;
        }
      }
    }
  }
  for (const Unit* u : own) {
    const Cell c = cell_of(u->pos, dom);
    ++obs.minimap.own.at(c.x, c.y);
  }
  for (int id : visible_enemies(team, world)) {
    const Cell c = cell_of(world.find(id)->pos, dom);
    ++obs.minimap.enemy.at(c.x, c.y);
  }

  auto crop = [&](const Grid& g) {
    Grid out(camera.width, camera.height);
    for (int y = 0; y < camera.height; ++y)
      for (int x = 0; x < camera.width; ++x) out.at(x, y) = g.at(camera.origin.x + x, camera.origin.y + y);
    return out;
  };
  obs.screen = {crop(obs.minimap.fog), crop(obs.minimap.own), crop(obs.minimap.enemy)};

  obs.scalars.clock = world.clock;
  obs.scalars.kills = world.kills;
  obs.scalars.own_alive = world.alive_count(team);
  obs.scalars.enemy_alive = world.alive_count(opponent(team));
  obs.scalars.step = step;
  obs.scalars.camera = camera.origin;
  obs.scalars.selected = selected;
  obs.available_actions = available_actions(team, selected);
  return obs;
}

// ---------------------------------------------------------------------------
// Episode
// ---------------------------------------------------------------------------

struct StepResult {
  Observation obs_pursuer;
  Observation obs_evader;
  std::int64_t reward_pursuer = 0;
  std::int64_t reward_evader = 0;
  bool done = false;
  std::int64_t episode_score = 0;
  bool pursuer_action_ignored = false;
  bool evader_action_ignored = false;
};

// FNV-1a over the observable simulation state; used to fingerprint episode logs.
inline std::uint64_t world_digest(const WorldState& w) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(&w.tick, sizeof w.tick);
  mix(&w.kills, sizeof w.kills);
  for (const Unit& u : w.units) {
    mix(&u.id, sizeof u.id);
    mix(&u.pos.x, sizeof u.pos.x);
    mix(&u.pos.y, sizeof u.pos.y);
    mix(&u.health, sizeof u.health);
  }
  return h;
}

/// One FindAndDefeat episode: the world plus the per-team interface state
/// (camera, army selection) that the action vocabulary manipulates.
class Episode {
 public:
  explicit Episode(EpisodeConfig config) : config_(std::move(config)) { config_.validate(); }

  const EpisodeConfig& config() const { return config_; }
  const WorldState& world() const { return world_; }
  // Scenario construction in tests; the episode loop owns the state otherwise.
  WorldState& world_mut() { return world_; }

  bool done() const { return done_; }
  int step_index() const { return step_; }
  std::int64_t score() const { return world_.kills; }
  CameraView pursuer_camera() const { return pursuer_camera_; }
  CameraView evader_camera() const { return evader_camera_; }
  bool selected(Team t) const { return t == Team::pursuer ? pursuer_selected_ : evader_selected_; }

  // Built-in evader reflexes (zergling aggression, drone flight) are on by default.
  void set_evader_reflexes(bool on) { reflexes_ = on; }
  bool evader_reflexes() const { return reflexes_; }

  std::pair<Observation, Observation> reset() { return reset(config_.seed); }

  std::pair<Observation, Observation> reset(std::uint64_t seed) {
    world_ = WorldState{};
    world_.domain = config_.domain;
    world_.rng = Rng(seed);
    const Vec2 center{config_.domain.width() / 2, config_.domain.height() / 2};
    const UnitStats& ps = units::by_name(config_.pursuer_type);
    // Pursuers start idle but weapons-free: an attack-move onto their own spot.
    for (int i = 0; i < config_.num_pursuers; ++i) {
      const int id = world_.spawn(Team::pursuer, ps, center);
      world_.find(id)->order = Order::attack_move_to(center);
    }
    spawn_evaders();
    const Cell centered{(config_.domain.cells_x() - config_.camera_width) / 2,
                        (config_.domain.cells_y() - config_.camera_height) / 2};
    pursuer_camera_ = {centered, config_.camera_width, config_.camera_height};
    evader_camera_ = pursuer_camera_;
    pursuer_selected_ = evader_selected_ = false;
    step_ = 0;
    done_ = false;
    return {observe(Team::pursuer), observe(Team::evader)};
  }

  Observation observe(Team team) const {
    return team == Team::pursuer
               ? render_observation(world_, team, pursuer_camera_, pursuer_selected_, step_)
               : render_observation(world_, team, evader_camera_, evader_selected_, step_);
  }

  StepResult step(const Action& pursuer_action, const Action& evader_action) {
    if (done_) throw std::logic_error("step called on a finished episode");
    StepResult r;
    r.pursuer_action_ignored = !apply_pursuer(pursuer_action);
    r.evader_action_ignored = !apply_evader(evader_action);

    const std::int64_t kills_before = world_.kills;
    for (int i = 0; i < config_.decision_period; ++i) {
      tick_once();
      if (world_.alive_count(Team::pursuer) == 0) break;
    }
    ++step_;
    done_ = world_.tick >= config_.final_tick() || world_.alive_count(Team::pursuer) == 0;

    r.reward_pursuer = world_.kills - kills_before;
    r.reward_evader = -r.reward_pursuer;
    r.done = done_;
    r.episode_score = world_.kills;
    r.obs_pursuer = observe(Team::pursuer);
    r.obs_evader = observe(Team::evader);
    return r;
  }

 private:
  void spawn_evaders() {
    const UnitStats& es = units::by_name(config_.evader_type);
    for (int i = 0; i < config_.num_evaders; ++i) {
      const double x = world_.rng.uniform(0.0, config_.domain.width());
      const double y = world_.rng.uniform(0.0, config_.domain.height());
      world_.spawn(Team::evader, es, {x, y});
    }
  }

  bool in_minimap(const Action& a) const {
    return a.x >= 0 && a.y >= 0 && a.x < config_.domain.cells_x() && a.y < config_.domain.cells_y();
  }

  // Returns false when the action had no effect because it was illegal.
  bool apply_pursuer(const Action& a) {
    if (!allowed_for(Team::pursuer, a.type)) return false;
    switch (a.type) {
      case ActionType::no_op: return true;
      case ActionType::select_army: pursuer_selected_ = true; return true;
      case ActionType::move_camera: {
        if (!in_minimap(a)) return false;
        const int ox = std::clamp(a.x - config_.camera_width / 2, 0, config_.domain.cells_x() - config_.camera_width);
        const int oy = std::clamp(a.y - config_.camera_height / 2, 0, config_.domain.cells_y() - config_.camera_height);
        pursuer_camera_.origin = {ox, oy};
        return true;
      }
      case ActionType::attack_screen: {
        if (!pursuer_selected_) return false;
        if (a.x < 0 || a.y < 0 || a.x >= config_.camera_width || a.y >= config_.camera_height) return false;
        const Vec2 target = cell_center({pursuer_camera_.origin.x + a.x, pursuer_camera_.origin.y + a.y});
        for (Unit& u : world_.units) {
          if (u.alive && u.team == Team::pursuer) {
            u.order = Order::attack_move_to(target);
            u.commanded = true;
          }
        }
        return true;
      }
      default: return false;
    }
  }

  bool apply_evader(const Action& a) {
    if (!allowed_for(Team::evader, a.type)) return false;
    switch (a.type) {
      case ActionType::no_op: return true;
      case ActionType::select_army: evader_selected_ = true; return true;
      case ActionType::move_minimap: {
        if (!evader_selected_ || !in_minimap(a)) return false;
        const Vec2 target = cell_center({a.x, a.y});
        for (Unit& u : world_.units) {
          if (u.alive && u.team == Team::evader) {
            u.order = Order::move_to(target);
            u.commanded = true;
          }
        }
        return true;
      }
      default: return false;
    }
  }

  void tick_once() {
    if (reflexes_) {
      const auto orders = config_.map_id == MapId::find_and_defeat_zerglings ? builtin::zergling_orders(world_)
                                                                             : builtin::drone_orders(world_);
      for (const builtin::UnitOrder& uo : orders) {
        Unit* u = world_.find(uo.id);
        if (!u) continue;
        // Agent commands win until the unit reaches its destination.
        if (!u->commanded) u->order = uo.order;
      }
    }
    advance_all(world_, config_.tick);
    const std::int64_t kills_before = world_.kills;
    resolve_combat(world_, config_.tick);
    world_.prune_dead();
    // Redeploy a full wave the moment the last evader falls.
    if (world_.kills > kills_before && world_.alive_count(Team::evader) == 0) spawn_evaders();
    ++world_.tick;
    world_.clock = static_cast<double>(world_.tick) * config_.tick;
  }

  EpisodeConfig config_;
  WorldState world_;
  CameraView pursuer_camera_;
  CameraView evader_camera_;
  bool pursuer_selected_ = false;
  bool evader_selected_ = false;
  bool reflexes_ = true;
  int step_ = 0;
  bool done_ = false;
};

}  // namespace saac
