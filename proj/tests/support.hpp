#pragma once

#include <cmath>
#include <cstdlib>

#include "saac/agents.hpp"

namespace saac::scenario {

// Timing of one complete boustrophedon pass with no enemies on the map.
struct SweepTiming {
  double pass_seconds = 0.0;        // first click until the last lane is done
  double transition_seconds = 0.0;  // spent dropping between lanes (vertical travel / U)
  double lane_seconds = 0.0;        // pass minus transitions
  double expected = 0.0;            // l_x * ceil(l_y / 2r) / U
  int lanes = 0;
};

inline SweepTiming measure_sweep(MapId map) {
  EpisodeConfig cfg = EpisodeConfig::defaults_for(map);
  cfg.num_evaders = 1;
  cfg.final_time = 400.0;
  const UnitStats& ps = units::by_name(cfg.pursuer_type);
  const double spacing = 2.0 * ps.attack_range;

  Episode ep(cfg);
  ep.set_evader_reflexes(false);
  ep.reset();
  WorldState& w = ep.world_mut();
  const Vec2 start = sweep_path(cfg.domain, spacing).front();
  for (Unit& u : w.units) {
    if (u.team == Team::evader) {
      u.alive = false;
    } else {
      u.pos = start;
      u.order = Order::hold();
    }
  }
  w.prune_dead();

  TraversalPursuer agent(cfg);
  SweepTiming t;
  t.lanes = static_cast<int>(lane_rows(cfg.domain, spacing).size());
  t.expected = cfg.domain.width() * t.lanes / ps.speed;

  Observation obs = ep.observe(Team::pursuer);
  int lane = 0, lane_changes = 0;
  double started = -1.0, vertical = 0.0;
  while (!ep.done() && lane_changes < t.lanes) {
    const Vec2 before = ep.world().units.front().pos;
    const double clock = ep.world().clock;
    obs = ep.step(agent.act(obs), Action::no_op()).obs_pursuer;
    const Vec2 after = ep.world().units.front().pos;
    if (started < 0.0 && !(after == before)) started = clock;
    if (started >= 0.0) vertical += std::abs(after.y - before.y);
    if (agent.state().lane_index != lane) {
      lane = agent.state().lane_index;
      ++lane_changes;
    }
  }
  t.pass_seconds = ep.world().clock - started;
  t.transition_seconds = vertical / ps.speed;
  t.lane_seconds = t.pass_seconds - t.transition_seconds;
  return t;
}

}  // namespace saac::scenario
