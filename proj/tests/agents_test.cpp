#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "saac/agents.hpp"
#include "support.hpp"

using namespace saac;

namespace {

EpisodeConfig map_config(MapId m, std::uint64_t seed = 3) {
  EpisodeConfig c = EpisodeConfig::defaults_for(m);
  c.seed = seed;
  return c;
}

double distance_to_polyline(Vec2 p, const std::vector<Vec2>& path) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec2 a = path[i], b = path[i + 1];
    const Vec2 ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    double t = len2 > 0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, distance(p, a + ab * t));
  }
  return best;
}

}  // namespace

TEST(Sweep, LaneRows) {
  const GameDomain d(32.0, 32.0);
  EXPECT_EQ(lane_rows(d, 12.0), (std::vector<double>{5.5, 17.5, 27.5}));
  EXPECT_EQ(lane_rows(d, 10.0), (std::vector<double>{4.5, 14.5, 24.5, 30.5}));
  EXPECT_EQ(lane_rows(d, 32.0), (std::vector<double>{15.5}));
  EXPECT_THROW(lane_rows(d, 0.0), std::invalid_argument);
}

TEST(Sweep, PathIsBoustrophedon) {
  const auto path = sweep_path(GameDomain(32.0, 32.0), 12.0);
  ASSERT_EQ(path.size(), 6u);
  EXPECT_EQ(path[0], (Vec2{0.5, 5.5}));
  EXPECT_EQ(path[1], (Vec2{31.5, 5.5}));
  EXPECT_EQ(path[2], (Vec2{31.5, 17.5}));
  EXPECT_EQ(path[3], (Vec2{0.5, 17.5}));
}

// Lanes 2r apart bring every point within attack range of the path. Lane
// ends sit on the outer cell centres, so the half-cell strips at x = 0 and
// x = l_x are only covered within hypot(r, 0.5).
TEST(Sweep, CoversDomainWithinAttackRange) {
  for (const UnitStats* s : {&units::marine(), &units::void_ray()}) {
    const GameDomain d(32.0, 32.0);
    const double r = s->attack_range;
    const auto path = sweep_path(d, 2.0 * r);
    double worst_edge = 0.0;
    for (double y = 0.0; y <= 32.0; y += 0.25) {
      for (double x = 0.0; x <= 32.0; x += 0.25) {
        const double dist = distance_to_polyline({x, y}, path);
        if (x >= 0.5 && x <= 31.5) {
          ASSERT_LE(dist, r + 1e-9) << s->name << " misses (" << x << "," << y << ")";
        } else {
          worst_edge = std::max(worst_edge, dist);
        }
      }
    }
    EXPECT_LE(worst_edge, std::hypot(r, 0.5) + 1e-9) << s->name;
  }
}

TEST(Sweep, FullPassDurationMatchesLaneTerm) {
  for (MapId m : {MapId::find_and_defeat_zerglings, MapId::find_and_defeat_drones}) {
    const scenario::SweepTiming t = scenario::measure_sweep(m);
    EXPECT_NEAR(t.lane_seconds / t.expected, 1.0, 0.05) << to_string(m) << " lane time " << t.lane_seconds;
    EXPECT_GT(t.transition_seconds, 0.0);
  }
}

TEST(Traversal, SelectsArmyBeforeAttacking) {
  const EpisodeConfig c = map_config(MapId::find_and_defeat_drones);
  TraversalPursuer agent(c);
  Episode ep(c);
  auto [op, oe] = ep.reset();
  EXPECT_EQ(agent.act(op).type, ActionType::select_army);
  op = ep.step(Action::select_army(), Action::no_op()).obs_pursuer;
  const Action a = agent.act(op);
  EXPECT_NE(a.type, ActionType::select_army);
  EXPECT_TRUE(a.type == ActionType::attack_screen || a.type == ActionType::move_camera ||
              a.type == ActionType::no_op);
}

TEST(Traversal, OnlyLegalActionsAndAttacksLandOnScreen) {
  const EpisodeConfig c = map_config(MapId::find_and_defeat_zerglings, 8);
  TraversalPursuer agent(c);
  Episode ep(c);
  auto [op, oe] = ep.reset();
  while (!ep.done()) {
    const Action a = agent.act(op);
    EXPECT_TRUE(allowed_for(Team::pursuer, a.type));
    if (a.type == ActionType::attack_screen) {
      EXPECT_TRUE(op.scalars.selected);
      EXPECT_GE(a.x, 0);
      EXPECT_LT(a.x, c.camera_width);
      EXPECT_GE(a.y, 0);
      EXPECT_LT(a.y, c.camera_height);
    }
    StepResult r = ep.step(a, Action::no_op());
    EXPECT_FALSE(r.pursuer_action_ignored);
    op = std::move(r.obs_pursuer);
  }
}

TEST(Traversal, EngagesVisibleEnemy) {
  EpisodeConfig c = map_config(MapId::find_and_defeat_drones);
  c.num_evaders = 1;
  TraversalPursuer agent(c);
  Episode ep(c);
  ep.reset();
  ep.set_evader_reflexes(false);
  ep.world_mut().units.back().pos = {24.5, 16.5};
  Observation op = ep.observe(Team::pursuer);
  int steps = 0;
  while (ep.world().kills == 0 && steps < 80) {
    StepResult r = ep.step(agent.act(op), Action::no_op());
    op = std::move(r.obs_pursuer);
    ++steps;
  }
  EXPECT_EQ(ep.world().kills, 1);
  EXPECT_TRUE(agent.has_issued_attack());
}

TEST(RandomEvader, TargetsInRangeAndDeterministic) {
  const EpisodeConfig c = map_config(MapId::find_and_defeat_drones);
  RandomEvader a(c, 5), b(c, 5), other(c, 6);
  Observation obs;
  obs.team = Team::evader;
  EXPECT_EQ(a.act(obs).type, ActionType::select_army);
  b.act(obs);
  other.act(obs);
  obs.scalars.selected = true;
  std::set<std::pair<int, int>> seen;
  bool differs = false;
  for (int i = 0; i < 2000; ++i) {
    const Action x = a.act(obs), y = b.act(obs), z = other.act(obs);
    ASSERT_EQ(x.type, ActionType::move_minimap);
    ASSERT_EQ(x, y);
    differs |= !(x == z);
    ASSERT_GE(x.x, 0);
    ASSERT_LT(x.x, 32);
    ASSERT_GE(x.y, 0);
    ASSERT_LT(x.y, 32);
    seen.insert({x.x, x.y});
  }
  EXPECT_TRUE(differs);
  EXPECT_GT(seen.size(), 800u);
}

TEST(ClusterEvader, DwellsThenRelocates) {
  const EpisodeConfig c = map_config(MapId::find_and_defeat_drones);
  ClusterEvader agent(c, 9, {2.0, 1.0});
  Observation obs;
  obs.team = Team::evader;
  obs.scalars.selected = true;
  const Action first = agent.act(obs);
  ASSERT_EQ(first.type, ActionType::move_minimap);
  const bool corner = (first.x == 0 || first.x == 31) && (first.y == 0 || first.y == 31);
  EXPECT_TRUE(corner);
  EXPECT_EQ(agent.state().target, cell_center({first.x, first.y}));
  for (int i = 0; i < 8; ++i) EXPECT_EQ(agent.act(obs).type, ActionType::no_op);  // 2 s at 0.25 s per step
  EXPECT_EQ(agent.act(obs).type, ActionType::move_minimap);
}

TEST(ClusterEvader, CornerBiasShapesTargets) {
  const EpisodeConfig c = map_config(MapId::find_and_defeat_drones);
  ClusterEvader agent(c, 4, {0.0, 0.5});
  Observation obs;
  obs.team = Team::evader;
  obs.scalars.selected = true;
  int corners = 0, n = 4000;
  for (int i = 0; i < n; ++i) {
    const Action a = agent.act(obs);
    corners += (a.x == 0 || a.x == 31) && (a.y == 0 || a.y == 31);
  }
  // 0.5 from the bias plus 4/1024 of the uniform draws.
  EXPECT_NEAR(static_cast<double>(corners) / n, 0.5 + 0.5 * 4.0 / 1024.0, 0.03);
}

TEST(Registry, NamesAndFactory) {
  const EpisodeConfig c = map_config(MapId::find_and_defeat_drones);
  EXPECT_TRUE(is_registered(Team::pursuer, "traversal"));
  EXPECT_FALSE(is_registered(Team::pursuer, "random"));
  for (const std::string& n : evader_agent_names()) {
    auto a = make_agent(n, Team::evader, c, 1);
    EXPECT_EQ(a->team(), Team::evader);
  }
  EXPECT_EQ(make_agent("traversal", Team::pursuer, c, 1)->team(), Team::pursuer);
  EXPECT_THROW(make_agent("traversal", Team::evader, c, 1), std::invalid_argument);
  EXPECT_THROW(make_agent("zerg_rush", Team::evader, c, 1), std::invalid_argument);
  EXPECT_FALSE(wants_evader_reflexes("stationary"));
  EXPECT_TRUE(wants_evader_reflexes("random"));
  EXPECT_NE(agent_seed(1, Team::pursuer), agent_seed(1, Team::evader));
}
