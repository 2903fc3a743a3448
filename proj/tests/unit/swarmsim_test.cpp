#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sgswarm/error.hpp"
#include "sgswarm/swarmsim/config_io.hpp"
#include "sgswarm/swarmsim/world.hpp"

namespace sgswarm::sim {
namespace {

constexpr double kL = 6.0;

WorldConfig base_config(Boundary boundary, TaskFeature green, int teams = 1,
                        TaskFeature red = TaskFeature::adversarial(1, 0, 1, 3, 0.3)) {
  WorldConfig c;
  c.env = {boundary, kL};
  c.teams.push_back({.count = 0, .task = green});
  if (teams == 2) c.teams.push_back({.count = 0, .task = red});
  return c;
}

TaskFeature flock() { return TaskFeature::flocking(1.0, 0.0, 0.4, 3.0); }
TaskFeature adve() { return TaskFeature::adversarial(1.0, 0.0, 1.0, 3, 0.3); }

AgentState robot(int id, Team team, Vec2 p, Vec2 v = {}) {
  AgentState a;
  a.id = id;
  a.team = team;
  a.p = p;
  a.v = v;
  a.hp = 80.0;
  return a;
}

std::vector<Vec2> zeros(const World& w) { return std::vector<Vec2>(w.agents().size()); }

TEST(Step, PeriodicWrapKeepsVelocity) {
  World w(base_config(Boundary::kPeriodic, flock()),
          {robot(0, Team::kGreen, {kL - 0.05, 2.0}, {1.0, 0.0})});
  w.step(zeros(w));
  const auto& a = w.agent(0);
  EXPECT_NEAR(a.p.x, 0.05, 1e-12);
  EXPECT_DOUBLE_EQ(a.p.y, 2.0);
  EXPECT_EQ(a.v, (Vec2{1.0, 0.0}));
}

TEST(Step, FixedBoundaryRepelsAndContains) {
  World w(base_config(Boundary::kFixed, flock()),
          {robot(0, Team::kGreen, {kL - 0.02, 3.0}, {1.0, 0.0})});
  w.step(zeros(w));
  const auto& a = w.agent(0);
  EXPECT_GE(a.p.x, 0.0);
  EXPECT_LE(a.p.x, kL);
  EXPECT_LT(a.v.x, 0.0);
}

TEST(Step, OverlappingDisksSpringApart) {
  // overlap 0.05 m -> 1.25 N each; dv = 0.125 m/s, dx = 0.0125 m per robot.
  World w(base_config(Boundary::kFixed, flock()),
          {robot(0, Team::kGreen, {3.0, 3.0}), robot(1, Team::kGreen, {3.15, 3.0})});
  w.step(zeros(w));
  const double d = (w.agent(1).p - w.agent(0).p).norm();
  EXPECT_NEAR(d, 0.175, 1e-12);
  EXPECT_GT(d, 0.15);
}

TEST(Step, ClampsSpeedAndActions) {
  World w(base_config(Boundary::kPeriodic, flock()),
          {robot(0, Team::kGreen, {3.0, 3.0}, {0.95, 0.0})});
  const std::vector<Vec2> push{{50.0, 0.0}};
  w.step(push);
  EXPECT_NEAR(w.agent(0).v.norm(), 1.0, 1e-12);
}

TEST(Step, RejectsWrongActionCount) {
  World w(base_config(Boundary::kPeriodic, flock()), {robot(0, Team::kGreen, {1, 1})});
  const std::vector<Vec2> none;
  EXPECT_THROW(w.step(none), InvalidInput);
}

TEST(Perceive, EmptyWhenNobodyInRange) {
  World w(base_config(Boundary::kFixed, TaskFeature::flocking(1, 0, 0.4, 1.0)),
          {robot(0, Team::kGreen, {0.5, 0.5}), robot(1, Team::kGreen, {5.0, 5.0})});
  const auto nb = w.perceive(0);
  EXPECT_TRUE(nb.teammates.empty());
  EXPECT_TRUE(nb.enemies.empty());
}

TEST(Perceive, FlockingCapsAtSixNearest) {
  std::vector<AgentState> agents{robot(0, Team::kGreen, {3.0, 3.0})};
  for (int k = 1; k <= 10; ++k) {
    const double ang = 0.6 * k;
    const double r = 0.3 + 0.15 * k;
    agents.push_back(robot(k, Team::kGreen, {3.0 + r * std::cos(ang), 3.0 + r * std::sin(ang)}));
  }
  World w(base_config(Boundary::kFixed, flock()), agents);
  const auto nb = w.perceive(0);
  EXPECT_EQ(nb.teammates, (std::vector<int>{1, 2, 3, 4, 5, 6}));
  EXPECT_TRUE(nb.enemies.empty());
}

TEST(Perceive, AdversarialEnemiesMatchBruteForceSort) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<AgentState> agents{robot(0, Team::kGreen, {3.0, 3.0})};
  for (int k = 1; k <= 4; ++k) agents.push_back(robot(k, Team::kRed, {3.0 + u(rng), 3.0 + u(rng)}));
  World w(base_config(Boundary::kFixed, adve(), 2, adve()), agents);
  std::vector<std::pair<double, int>> oracle;
  for (int k = 1; k <= 4; ++k) oracle.push_back({(agents[k].p - agents[0].p).norm(), k});
  std::sort(oracle.begin(), oracle.end());
  const auto nb = w.perceive(0);
  ASSERT_EQ(nb.enemies.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(nb.enemies[k], oracle[k].second);
}

TEST(Perceive, DeadAgentIsAnError) {
  World w(base_config(Boundary::kFixed, flock()), {robot(0, Team::kGreen, {1, 1})});
  w.set_hp(0, 0.0);
  EXPECT_THROW(w.perceive(0), InvalidInput);
  EXPECT_THROW(w.observe(0), InvalidInput);
}

TEST(AttackPredicate, PursuitFromBehind) {
  const auto attacker = robot(0, Team::kGreen, {0, 0}, {1, 0});
  const auto target = robot(1, Team::kRed, {0.2, 0}, {1, 0});
  EXPECT_TRUE(attack_predicate(attacker, target, 0.3));
}

TEST(AttackPredicate, TargetFacingAttacker) {
  const auto attacker = robot(0, Team::kGreen, {0, 0}, {1, 0});
  const auto target = robot(1, Team::kRed, {0.2, 0}, {-1, 0});
  EXPECT_FALSE(attack_predicate(attacker, target, 0.3));
}

TEST(AttackPredicate, AttackerHeadingTooFarOff) {
  const double a80 = 80.0 * std::numbers::pi / 180.0;
  const double a70 = 70.0 * std::numbers::pi / 180.0;
  const auto target = robot(1, Team::kRed, {0.2, 0}, {1, 0});
  EXPECT_FALSE(attack_predicate(robot(0, Team::kGreen, {0, 0}, {std::cos(a80), std::sin(a80)}),
                                target, 0.3));
  EXPECT_TRUE(attack_predicate(robot(0, Team::kGreen, {0, 0}, {std::cos(a70), std::sin(a70)}),
                               target, 0.3));
}

TEST(AttackPredicate, OutOfRangeOrStationary) {
  EXPECT_FALSE(attack_predicate({0.31, 0}, {1, 0}, {1, 0}, 0.3));
  EXPECT_FALSE(attack_predicate({0.2, 0}, {0, 0}, {1, 0}, 0.3));
  EXPECT_FALSE(attack_predicate({0.2, 0}, {1, 0}, {0, 0}, 0.3));
}

TEST(Combat, AttackerCapLimitsDamage) {
  // five green robots chase red robot 5 from behind, all within r_atta
  std::vector<AgentState> agents;
  for (int k = 0; k < 5; ++k) {
    const double ang = (-0.2 + 0.1 * k);
    agents.push_back(robot(k, Team::kGreen, {3.0 - 0.2 * std::cos(ang), 3.0 - 0.2 * std::sin(ang)},
                           {1.0, 0.0}));
  }
  agents.push_back(robot(5, Team::kRed, {3.0, 3.0}, {1.0, 0.0}));
  World w(base_config(Boundary::kFixed, adve(), 2, adve()), agents);
  const auto ev = w.resolve_combat();
  EXPECT_DOUBLE_EQ(w.agent(5).hp, 77.0);
  EXPECT_DOUBLE_EQ(ev.hp_loss[5], 3.0);
  for (int k = 0; k < 5; ++k) EXPECT_TRUE(ev.in_attack_position[k]);
}

TEST(Combat, RegenerationCapsAtHpMax) {
  std::vector<AgentState> agents{robot(0, Team::kGreen, {1, 1}, {1, 0}),
                                 robot(1, Team::kRed, {5, 5}, {1, 0})};
  agents[1].hp = 79.9;
  World w(base_config(Boundary::kFixed, adve(), 2, adve()), agents);
  w.resolve_combat();
  EXPECT_EQ(w.agent(0).hp, 80.0);
  EXPECT_EQ(w.agent(1).hp, 80.0);
}

TEST(Combat, KillCreditsEveryHitter) {
  std::vector<AgentState> agents{robot(0, Team::kGreen, {2.8, 3.0}, {1, 0}),
                                 robot(1, Team::kGreen, {2.85, 3.1}, {1, 0}),
                                 robot(2, Team::kRed, {3.0, 3.0}, {1, 0})};
  agents[2].hp = 1.5;
  World w(base_config(Boundary::kFixed, adve(), 2, adve()), agents);
  const auto ev = w.resolve_combat();
  ASSERT_EQ(ev.kills.size(), 1u);
  EXPECT_EQ(ev.kills[0].victim, 2);
  EXPECT_EQ(ev.kills[0].attackers.size(), 2u);
  EXPECT_FALSE(w.agent(2).alive);
  EXPECT_EQ(w.agent(2).hp, 0.0);
  EXPECT_DOUBLE_EQ(adversarial_reward(0, ev, 5, 1), 6.0);
  EXPECT_DOUBLE_EQ(adversarial_reward(2, ev, 5, 1), -5.0);
}

TEST(AdversarialReward, Cases) {
  StepEvents ev;
  ev.in_attack_position.assign(3, 0);
  EXPECT_EQ(adversarial_reward(0, ev, 5, 1), 0.0);
  ev.kills.push_back({2, {0}});
  EXPECT_EQ(adversarial_reward(0, ev, 5, 1), 5.0);
  StepEvents both;
  both.in_attack_position = {1, 0, 0};
  both.kills.push_back({0, {1}});
  EXPECT_EQ(adversarial_reward(0, both, 5, 1), -4.0);
}

TEST(FlockingReward, ZeroAtReferenceDistance) {
  const std::vector<RelativeState> nb{{{0.4, 0}, {1, 0}}, {{0, -0.4}, {1, 0}}};
  EXPECT_EQ(flocking_reward({1, 0}, nb, 0.4, 1, 15, 2), 0.0);
}

TEST(FlockingReward, Attraction) {
  const std::vector<RelativeState> nb{{{0.5, 0}, {0.5, 0.5}}};
  EXPECT_NEAR(flocking_reward({0.5, 0.5}, nb, 0.4, 1, 15, 2), -0.1, 1e-12);
}

TEST(FlockingReward, AlignmentOpposedNeighbours) {
  const std::vector<RelativeState> nb{{{0.4, 0}, {-1, 0}}, {{-0.4, 0}, {-3, 0}}};
  EXPECT_NEAR(flocking_reward({2, 0}, nb, 0.4, 1, 15, 2), -4.0, 1e-12);
}

TEST(FlockingReward, NoNeighboursIsZero) {
  EXPECT_EQ(flocking_reward({1, 0}, {}, 0.4, 1, 15, 2), 0.0);
}

TEST(FlockingReward, LatticeInteriorIsZero) {
  // hexagonal lattice at d_ref with equal velocities
  const double d = 0.4;
  std::vector<AgentState> agents;
  int id = 0;
  for (int r = -2; r <= 2; ++r) {
    for (int c = -2; c <= 2; ++c) {
      const double x = 3.0 + d * (c + 0.5 * (r & 1));
      const double y = 3.0 + d * std::sqrt(3.0) / 2.0 * r;
      agents.push_back(robot(id++, Team::kGreen, {x, y}, {0.3, 0.1}));
    }
  }
  World w(base_config(Boundary::kFixed, TaskFeature::flocking(1, 0, d, 0.45)), agents);
  EXPECT_NEAR(w.flocking_reward_of(12), 0.0, 1e-12);  // centre of the 5x5 patch
}

TEST(Observe, LoneAgent) {
  World w(base_config(Boundary::kFixed, flock()), {robot(0, Team::kGreen, {1, 2}, {0.3, -0.1})});
  const auto o = w.observe(0);
  ASSERT_EQ(o.size(), 28u);
  EXPECT_EQ(o[0], 1.0);
  EXPECT_EQ(o[1], 2.0);
  EXPECT_EQ(o[2], 0.3);
  EXPECT_EQ(o[3], -0.1);
  for (std::size_t k = 4; k < o.size(); ++k) EXPECT_EQ(o[k], 0.0);
}

TEST(Observe, RelativeTeammateSlot) {
  World w(base_config(Boundary::kFixed, flock()),
          {robot(0, Team::kGreen, {1, 2}, {0.3, 0}), robot(1, Team::kGreen, {2, 2}, {0.3, 0})});
  const auto o = w.observe(0);
  EXPECT_EQ((std::vector<double>(o.begin() + 4, o.begin() + 8)), (std::vector<double>{1, 0, 0, 0}));
}

TEST(Observe, CrowdedOrderingMatchesBruteForce) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 5.5);
  std::vector<AgentState> agents;
  for (int k = 0; k < 12; ++k) agents.push_back(robot(k, k < 6 ? Team::kGreen : Team::kRed, {u(rng), u(rng)}, {0.1, 0.2}));
  World w(base_config(Boundary::kFixed, adve(), 2, adve()), agents);
  const auto o = w.observe(0);
  std::vector<std::pair<double, int>> mates, foes;
  for (int k = 1; k < 12; ++k) {
    const double d = (agents[k].p - agents[0].p).norm();
    if (d > 3.0) continue;
    (k < 6 ? mates : foes).push_back({d, k});
  }
  std::sort(mates.begin(), mates.end());
  std::sort(foes.begin(), foes.end());
  for (std::size_t s = 0; s < std::min<std::size_t>(3, mates.size()); ++s) {
    const Vec2 dp = agents[mates[s].second].p - agents[0].p;
    EXPECT_DOUBLE_EQ(o[4 + 4 * s], dp.x);
    EXPECT_DOUBLE_EQ(o[5 + 4 * s], dp.y);
  }
  for (std::size_t s = 0; s < std::min<std::size_t>(3, foes.size()); ++s) {
    const Vec2 dp = agents[foes[s].second].p - agents[0].p;
    EXPECT_DOUBLE_EQ(o[16 + 4 * s], dp.x);
    EXPECT_DOUBLE_EQ(o[17 + 4 * s], dp.y);
  }
}

TEST(ScriptedPursuit, Cases) {
  EXPECT_EQ(pursuit_force({0, 0}, {0, 0}, {1, 0}, {0, 0}, 1, 2), (Vec2{1, 0}));
  EXPECT_EQ(pursuit_force({1, 1}, {0.5, 0}, {1, 1}, {0.5, 0}, 1, 2), (Vec2{0, 0}));
  const Vec2 raw = pursuit_force({0, 0}, {0, 0}, {0, 2}, {0, 1}, 1, 2);
  EXPECT_EQ(raw, (Vec2{0, 4}));
  EXPECT_EQ(force_to_action(raw, 2.0), (Vec2{0, 1}));

  World w(base_config(Boundary::kFixed, adve(), 2, adve()),
          {robot(0, Team::kRed, {1, 1}), robot(1, Team::kGreen, {2, 1}), robot(2, Team::kGreen, {4, 4})});
  EXPECT_EQ(w.scripted_pursuit(0, 1, 2), (Vec2{0.5, 0}));
  w.set_hp(1, 0);
  w.set_hp(2, 0);
  EXPECT_EQ(w.scripted_pursuit(0, 1, 2), (Vec2{0, 0}));
}

TEST(Leader, PolicyAndTraversal) {
  auto cfg = base_config(Boundary::kFixed, flock());
  cfg.teams[0].leader_paths.push_back({{{1.0, 3.0}, {4.0, 3.0}, {4.0, 4.5}}, 0.3});
  auto leader = robot(0, Team::kGreen, {1.0, 3.0}, {0.3, 0.0});
  leader.is_leader = true;
  World on_path(cfg, {leader});
  EXPECT_EQ(on_path.leader_policy(0), (Vec2{0, 0}));

  leader.v = {};
  World at_rest(cfg, {leader});
  EXPECT_GT(at_rest.leader_policy(0).x, 0.0);

  World run(cfg, {leader});
  for (int t = 0; t < 400; ++t) {
    const std::vector<Vec2> a{run.leader_policy(0)};
    run.step(a);
  }
  EXPECT_LT((run.agent(0).p - Vec2{4.0, 4.5}).norm(), 0.1);
}

TEST(World, SeededSpawnIsDeterministic) {
  WorldConfig c;
  c.env = {Boundary::kFixed, kL};
  c.teams.push_back({.count = 10, .task = adve(), .spawn_center = {2, 3}});
  c.teams.push_back({.count = 10, .task = adve(), .spawn_center = {4, 3}});
  c.seed = 42;
  World a(c), b(c);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<Vec2> acts(20);
    for (auto& x : acts) x = {u(rng), u(rng)};
    a.step(acts);
    b.step(acts);
  }
  for (int k = 0; k < 20; ++k) {
    EXPECT_EQ(a.agent(k).p, b.agent(k).p);
    EXPECT_EQ(a.agent(k).hp, b.agent(k).hp);
  }
}

TEST(World, InvariantsUnderRandomActions) {
  for (auto boundary : {Boundary::kFixed, Boundary::kPeriodic}) {
    WorldConfig c;
    c.env = {boundary, kL};
    c.teams.push_back({.count = 8, .task = adve(), .spawn_center = {2.5, 3}});
    c.teams.push_back({.count = 8, .task = adve(), .spawn_center = {3.5, 3}});
    c.seed = 5;
    World w(c);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::vector<bool> dead(16, false);
    for (int t = 0; t < 500; ++t) {
      std::vector<Vec2> acts(16);
      for (auto& x : acts) x = {u(rng), u(rng)};
      w.step(acts);
      for (const auto& a : w.agents()) {
        ASSERT_TRUE(a.p.finite() && a.v.finite());
        ASSERT_GE(a.p.x, 0.0);
        ASSERT_LE(a.p.x, kL);
        ASSERT_GE(a.p.y, 0.0);
        ASSERT_LE(a.p.y, kL);
        ASSERT_LE(a.v.norm(), 1.0 + 1e-9);
        ASSERT_GE(a.hp, 0.0);
        ASSERT_LE(a.hp, 80.0);
        if (dead[a.id]) ASSERT_FALSE(a.alive);
        dead[a.id] = !a.alive;
      }
    }
  }
}

TEST(ConfigIo, RoundTripAndKeyPaths) {
  WorldConfig c;
  c.env = {Boundary::kPeriodic, 5.0};
  c.teams.push_back({.count = 4, .task = flock()});
  c.teams[0].leader_paths.push_back({{{1, 1}, {2, 2}}, 0.2});
  c.seed = 9;
  const auto j = to_json(c);
  const auto back = world_config_from_json(j);
  EXPECT_EQ(back.env, c.env);
  EXPECT_EQ(back.teams[0].task, c.teams[0].task);
  EXPECT_EQ(back.teams[0].leader_paths[0].waypoints[1], (Vec2{2, 2}));
  EXPECT_EQ(back.seed, 9u);

  auto bad = j;
  bad["teams"][0]["task"] = {1, 0, 0.4};
  try {
    world_config_from_json(bad);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key_path(), "world.teams[0].task");
  }
}

TEST(Features, ParsingAndArity) {
  EXPECT_EQ(parse_feature_list("1, 0,0.4,3").size(), 4u);
  EXPECT_THROW(parse_feature_list("1,x"), InvalidInput);
  const std::vector<double> three{1, 0, 0.4};
  EXPECT_THROW(TaskFeature::from_values(three), InvalidInput);
  const std::vector<double> adv{1, 0, 1, 3, 0.3};
  const auto t = TaskFeature::from_values(adv);
  EXPECT_EQ(t.kind, TaskKind::kAdversarial);
  EXPECT_EQ(t.padded()[4], 0.3);
  EXPECT_EQ(TaskFeature::flocking(1, 0, 0.4, 3).padded()[4], 0.0);
  const std::vector<double> env{2, 6};
  EXPECT_THROW(EnvFeature::from_values(env), InvalidInput);
}

}  // namespace
}  // namespace sgswarm::sim
