#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "saac/episode.hpp"
#include "saac/rng.hpp"

namespace saac {

class Agent {
 public:
  virtual ~Agent() = default;
  virtual Team team() const = 0;
  virtual Action act(const Observation& obs) = 0;
};

// ---------------------------------------------------------------------------
// Boustrophedon sweep geometry
// ---------------------------------------------------------------------------

/// Lane centre rows for a sweep with lane spacing `spacing`. Centres sit at
/// spacing/2 + k*spacing; the last lane is pulled up so that it is centred
/// on the residual strip. Rows are snapped down onto cell centres.
inline std::vector<double> lane_rows(const GameDomain& domain, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("lane spacing must be positive");
  const int lanes = static_cast<int>(std::ceil(domain.height() / spacing - 1e-9));
  std::vector<double> rows;
  for (int k = 0; k < lanes; ++k) {
    double y = spacing / 2 + k * spacing;
    if (k == lanes - 1) {
      const double residual = domain.height() - k * spacing;
      y = std::min(y, domain.height() - residual / 2);
    }
    rows.push_back(std::max(0.5, std::ceil(y - 1e-9) - 0.5));
  }
  return rows;
}

/// One full pass over the lanes as a polyline: lane 0 left to right, drop to
/// lane 1, right to left, and so on.
inline std::vector<Vec2> sweep_path(const GameDomain& domain, double spacing) {
  const std::vector<double> rows = lane_rows(domain, spacing);
  const double x_lo = 0.5, x_hi = domain.width() - 0.5;
  std::vector<Vec2> path;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const bool forward = k % 2 == 0;
    path.push_back({forward ? x_lo : x_hi, rows[k]});
    path.push_back({forward ? x_hi : x_lo, rows[k]});
  }
  return path;
}

// ---------------------------------------------------------------------------
// Traversal pursuer
// ---------------------------------------------------------------------------

struct TraversalState {
  enum class Phase : std::uint8_t { sweeping, acquiring, attacking };

  int lane_index = 0;
  double lane_spacing = 0.0;
  int sweep_direction = +1;  // +1 sweeps toward +x on the current lane
  Phase phase = Phase::sweeping;
  Vec2 current_waypoint{};
};

/// Scripted pursuer that sweeps the map in lanes of width 2r and breaks off
/// to attack anything that shows up on the minimap, issuing actions the way
/// a human would: select the army, move the camera, then click attack.
class TraversalPursuer final : public Agent {
 public:
  struct Params {
    double pursuit_budget = 5.0;  // seconds of chasing without a kill before giving up
    double ignore_after_budget = 5.0;
    double arrival_radius = 0.75;
    double replan_distance = 3.0;
  };

  explicit TraversalPursuer(const EpisodeConfig& config) : TraversalPursuer(config, Params{}) {}
  TraversalPursuer(const EpisodeConfig& config, Params params)
      : domain_(config.domain),
        camera_w_(config.camera_width),
        camera_h_(config.camera_height),
        step_seconds_(config.decision_seconds()),
        params_(params) {
    state_.lane_spacing = 2.0 * units::by_name(config.pursuer_type).attack_range;
    path_ = sweep_path(domain_, state_.lane_spacing);
  }

  Team team() const override { return Team::pursuer; }
  const TraversalState& state() const { return state_; }
  const std::vector<Vec2>& path() const { return path_; }
  bool has_issued_attack() const { return issued_attack_; }
  bool select_issued() const { return select_issued_; }

  Action act(const Observation& obs) override {
    if (!obs.scalars.selected) {
      select_issued_ = true;
      return Action::select_army();
    }
    const std::optional<Vec2> group = own_centroid(obs);
    if (!group) return Action::no_op();
    if (!started_) {
      start_from(*group);
      started_ = true;
    }

    if (obs.scalars.kills > last_kills_) chase_time_ = 0.0;
    last_kills_ = obs.scalars.kills;
    if (ignore_time_ > 0.0) ignore_time_ -= step_seconds_;

    const CameraView cam{obs.scalars.camera, camera_w_, camera_h_};
    if (ignore_time_ <= 0.0) {
      if (const std::optional<Cell> target = nearest_enemy(obs, *group)) {
        if (state_.phase != TraversalState::Phase::sweeping) chase_time_ += step_seconds_;
        if (chase_time_ <= params_.pursuit_budget) return engage(*target, cam);
        ignore_time_ = params_.ignore_after_budget;
      }
    }
    if (state_.phase != TraversalState::Phase::sweeping) {
      state_.phase = TraversalState::Phase::sweeping;
      issued_.reset();
    }
    chase_time_ = 0.0;
    return sweep(*group, cam);
  }

 private:
  static std::optional<Vec2> own_centroid(const Observation& obs) {
    const Grid& g = obs.minimap.own;
    Vec2 sum{};
    int n = 0;
    for (int y = 0; y < g.height; ++y)
      for (int x = 0; x < g.width; ++x)
        if (const int c = g.at(x, y); c > 0) {
          sum = sum + cell_center({x, y}) * c;
          n += c;
        }
    if (n == 0) return std::nullopt;
    return sum * (1.0 / n);
  }

  static std::optional<Cell> nearest_enemy(const Observation& obs, Vec2 from) {
    const Grid& g = obs.minimap.enemy;
    std::optional<Cell> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int y = 0; y < g.height; ++y)
      for (int x = 0; x < g.width; ++x)
        if (g.at(x, y) > 0) {
          const double d = distance(from, cell_center({x, y}));
          if (d < best_d) {
            best_d = d;
            best = Cell{x, y};
          }
        }
    return best;
  }

  // Picks the lane nearest to the group and the nearer end of it.
  void start_from(Vec2 g) {
    const int lanes = static_cast<int>(path_.size() / 2);
    int best = 0;
    for (int k = 1; k < lanes; ++k)
      if (std::abs(path_[2 * k].y - g.y) < std::abs(path_[2 * best].y - g.y)) best = k;
    state_.lane_index = best;
    const double x_lo = path_[0].x, x_hi = path_[1].x;
    state_.sweep_direction = std::abs(g.x - x_lo) <= std::abs(g.x - x_hi) ? +1 : -1;
    lane_step_ = best == lanes - 1 ? -1 : +1;
    if (lanes == 1) lane_step_ = 0;
    state_.current_waypoint = {state_.sweep_direction > 0 ? x_lo : x_hi, path_[2 * best].y};
    at_lane_start_ = true;
  }

  void advance_waypoint() {
    const double x_lo = path_[0].x, x_hi = path_[1].x;
    if (at_lane_start_) {
      state_.current_waypoint = {state_.sweep_direction > 0 ? x_hi : x_lo, state_.current_waypoint.y};
      at_lane_start_ = false;
      return;
    }
    // Lane finished: drop to the next lane (ping-pong between the outer lanes)
    // and reverse the sweep direction.
    const int lanes = static_cast<int>(path_.size() / 2);
    if (lanes > 1) {
      if (state_.lane_index + lane_step_ < 0 || state_.lane_index + lane_step_ >= lanes) lane_step_ = -lane_step_;
      state_.lane_index += lane_step_;
    }
    state_.sweep_direction = -state_.sweep_direction;
    state_.current_waypoint = {state_.current_waypoint.x, path_[2 * state_.lane_index].y};
    at_lane_start_ = true;
  }

  Cell to_cell(Vec2 p) const { return cell_of(p, domain_); }

  Action attack_at(Cell world_cell, const CameraView& cam) {
    issued_ = world_cell;
    issued_attack_ = true;
    return Action::attack_screen({world_cell.x - cam.origin.x, world_cell.y - cam.origin.y});
  }

  Action engage(Cell target, const CameraView& cam) {
    if (!cam.contains(target)) {
      state_.phase = TraversalState::Phase::acquiring;
      issued_.reset();
      return Action::move_camera(target);
    }
    state_.phase = TraversalState::Phase::attacking;
    if (issued_ && *issued_ == target) return Action::no_op();
    return attack_at(target, cam);
  }

  Action sweep(Vec2 g, const CameraView& cam) {
    if (distance(g, state_.current_waypoint) < params_.arrival_radius) {
      advance_waypoint();
      issued_.reset();
    }
    const Cell goal = to_cell(state_.current_waypoint);
    if (issued_ && *issued_ == goal) return Action::no_op();
    if (cam.contains(goal)) return attack_at(goal, cam);
    // Still well short of the last intermediate click.
    if (issued_ && distance(g, cell_center(*issued_)) > params_.replan_distance) return Action::no_op();

    // Off-screen waypoint: click the farthest visible point toward it, or
    // bring the camera forward along the travel direction first.
    const Vec2 delta = state_.current_waypoint - g;
    const double len = delta.norm();
    const Vec2 dir = delta * (1.0 / len);
    if (const std::optional<Cell> far = farthest_on_screen(g, dir, len, cam);
        far && distance(cell_center(*far), g) > params_.replan_distance + 1.0) {
      return attack_at(*far, cam);
    }
    const double lead = std::min(len, 0.5 * std::min(camera_w_, camera_h_) - 1.0);
    return Action::move_camera(to_cell(g + dir * lead));
  }

  std::optional<Cell> farthest_on_screen(Vec2 g, Vec2 dir, double len, const CameraView& cam) const {
    std::optional<Cell> best;
    for (double t = 0.0; t <= len + 1e-9; t += 0.25) {
      const Cell c = to_cell(g + dir * t);
      if (cam.contains(c)) best = c;
    }
    return best;
  }

  GameDomain domain_;
  int camera_w_, camera_h_;
  double step_seconds_;
  Params params_;
  TraversalState state_;
  std::vector<Vec2> path_;
  bool started_ = false;
  bool at_lane_start_ = true;
  int lane_step_ = +1;
  std::optional<Cell> issued_;  // world cell of the last attack click still being pursued
  std::int64_t last_kills_ = 0;
  double chase_time_ = 0.0;
  double ignore_time_ = 0.0;
  bool issued_attack_ = false;
  bool select_issued_ = false;
};

// ---------------------------------------------------------------------------
// Evader strategies
// ---------------------------------------------------------------------------

/// Leaves the units to their built-in reflexes.
class BuiltinEvader final : public Agent {
 public:
  Team team() const override { return Team::evader; }
  Action act(const Observation&) override { return Action::no_op(); }
};

/// Sends the whole team to a uniformly random cell every decision step.
class RandomEvader final : public Agent {
 public:
  RandomEvader(const EpisodeConfig& config, std::uint64_t seed)
      : cells_x_(config.domain.cells_x()), cells_y_(config.domain.cells_y()), rng_(seed) {}

  Team team() const override { return Team::evader; }

  Action act(const Observation& obs) override {
    if (!obs.scalars.selected) return Action::select_army();
    const int x = static_cast<int>(rng_.below(static_cast<std::uint64_t>(cells_x_)));
    const int y = static_cast<int>(rng_.below(static_cast<std::uint64_t>(cells_y_)));
    return Action::move_minimap({x, y});
  }

 private:
  int cells_x_, cells_y_;
  Rng rng_;
};

struct ClusterState {
  Vec2 target{};
  double dwell_remaining = 0.0;
  double dwell_length = 10.0;
  Rng rng;
};

/// Moves the team as one body to a random spot, favouring the corners, then
/// stays put for the dwell interval before relocating.
class ClusterEvader final : public Agent {
 public:
  struct Params {
    double dwell_length = 10.0;  // seconds between relocations
    double corner_bias = 0.5;    // probability that the next spot is a corner
  };

  ClusterEvader(const EpisodeConfig& config, std::uint64_t seed) : ClusterEvader(config, seed, Params{}) {}
  ClusterEvader(const EpisodeConfig& config, std::uint64_t seed, Params params)
      : cells_x_(config.domain.cells_x()),
        cells_y_(config.domain.cells_y()),
        step_seconds_(config.decision_seconds()),
        corner_bias_(params.corner_bias) {
    state_.dwell_length = params.dwell_length;
    state_.rng = Rng(seed);
  }

  Team team() const override { return Team::evader; }
  const ClusterState& state() const { return state_; }

  Action act(const Observation& obs) override {
    if (!obs.scalars.selected) return Action::select_army();
    if (state_.dwell_remaining > 0.0) {
      state_.dwell_remaining = std::max(0.0, state_.dwell_remaining - step_seconds_);
      return Action::no_op();
    }
    Cell c;
    if (state_.rng.bernoulli(corner_bias_)) {
      const std::array<Cell, 4> corners{Cell{0, 0}, Cell{cells_x_ - 1, 0}, Cell{0, cells_y_ - 1},
                                        Cell{cells_x_ - 1, cells_y_ - 1}};
      c = corners[state_.rng.below(4)];
    } else {
      c = {static_cast<int>(state_.rng.below(static_cast<std::uint64_t>(cells_x_))),
           static_cast<int>(state_.rng.below(static_cast<std::uint64_t>(cells_y_)))};
    }
    state_.target = cell_center(c);
    state_.dwell_remaining = state_.dwell_length;
    return Action::move_minimap(c);
  }

 private:
  int cells_x_, cells_y_;
  double step_seconds_;
  double corner_bias_;
  ClusterState state_;
};

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& pursuer_agent_names() {
  static const std::vector<std::string> names{"traversal"};
  return names;
}

// "stationary" is the built-in evader with the drone/zergling reflexes switched off.
inline const std::vector<std::string>& evader_agent_names() {
  static const std::vector<std::string> names{"builtin", "random", "cluster", "stationary"};
  return names;
}

inline bool is_registered(Team team, std::string_view name) {
  const auto& names = team == Team::pursuer ? pursuer_agent_names() : evader_agent_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

// Whether the engine should run the built-in evader reflexes alongside this agent.
inline bool wants_evader_reflexes(std::string_view evader_agent) { return evader_agent != "stationary"; }

inline std::uint64_t agent_seed(std::uint64_t episode_seed, Team team) {
  return mix_seed(episode_seed, team == Team::pursuer ? 1 : 2);
}

inline std::unique_ptr<Agent> make_agent(std::string_view name, Team team, const EpisodeConfig& config,
                                         std::uint64_t episode_seed) {
  const std::uint64_t seed = agent_seed(episode_seed, team);
  if (team == Team::pursuer) {
    if (name == "traversal") return std::make_unique<TraversalPursuer>(config);
  } else {
    if (name == "builtin" || name == "stationary") return std::make_unique<BuiltinEvader>();
    if (name == "random") return std::make_unique<RandomEvader>(config, seed);
    if (name == "cluster") return std::make_unique<ClusterEvader>(config, seed);
  }
  throw std::invalid_argument("unknown " + std::string(team == Team::pursuer ? "pursuer" : "evader") +
                              " agent: " + std::string(name));
}

}  // namespace saac
