#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "sgswarm/error.hpp"
#include "sgswarm/marl/skill.hpp"
#include "sgswarm/numcore/gradient_check.hpp"
#include "sgswarm/numcore/init.hpp"

namespace sgswarm::marl {
namespace {

std::vector<double> obs_of(int dim, double scale) {
  std::vector<double> o(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) o[static_cast<std::size_t>(k)] = scale * std::sin(0.7 * k + 0.3);
  return o;
}

double weight_distance(const num::NetWeights& a, const num::NetWeights& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    s += (a.layers[k].weight - b.layers[k].weight).squaredNorm();
    s += (a.layers[k].bias - b.layers[k].bias).squaredNorm();
  }
  return std::sqrt(s);
}

TEST(ReplayBuffer, RingKeepsSizeAtCapacity) {
  ReplayBuffer buf(5, 3, 1);
  const std::vector<double> o{1, 2, 3};
  for (int k = 0; k < 12; ++k) buf.push(o, {0.1 * k, 0}, k, o, false);
  EXPECT_EQ(buf.size(), 5u);
  // slots hold rewards 10, 11, 7, 8, 9 after wrapping
  EXPECT_EQ(buf.at(0).reward, 10.0);
  EXPECT_EQ(buf.at(1).reward, 11.0);
  EXPECT_EQ(buf.at(2).reward, 7.0);
}

TEST(ReplayBuffer, RejectsWrongObservationLength) {
  ReplayBuffer buf(5, 3, 1);
  const std::vector<double> o{1, 2};
  EXPECT_THROW(buf.push(o, {}, 0, o, false), InvalidInput);
}

TEST(ReplayBuffer, SamplesAreDistinct) {
  ReplayBuffer buf(100, 1, 4);
  const std::vector<double> o{0};
  for (int k = 0; k < 100; ++k) buf.push(o, {}, k, o, false);
  for (int rep = 0; rep < 50; ++rep) {
    auto idx = buf.sample_indices(60);
    std::sort(idx.begin(), idx.end());
    EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
    EXPECT_LT(idx.back(), 100u);
  }
  EXPECT_THROW(buf.sample_indices(101), InvalidInput);
}

TEST(ReplayBuffer, UniformityChiSquare) {
  ReplayBuffer buf(100, 1, 2024);
  const std::vector<double> o{0};
  for (int k = 0; k < 100; ++k) buf.push(o, {}, 0, o, false);
  std::vector<double> counts(100, 0.0);
  const int draws = 4000;
  for (int rep = 0; rep < draws; ++rep) {
    for (auto i : buf.sample_indices(10)) counts[i] += 1.0;
  }
  const double expected = draws * 10 / 100.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 134.64161685578915);  // 99 dof, p = 0.01
}

TEST(Act, DeterministicWithoutNoise) {
  const auto b = PolicyBundle::make(sim::TaskKind::kFlocking, 28, 16, 2, 1e-4, 1e-3, 3);
  const auto o = obs_of(28, 1.0);
  EXPECT_EQ(act(b, o, false, nullptr), act(b, o, false, nullptr));
}

TEST(Act, ZeroActorGivesZero) {
  auto b = PolicyBundle::make(sim::TaskKind::kFlocking, 28, 16, 2, 1e-4, 1e-3, 3);
  b.actor.weights = num::NetWeights::zeros(b.actor.spec);
  EXPECT_EQ(act(b, obs_of(28, 1.0), false, nullptr), (sim::Vec2{0, 0}));
}

TEST(Act, SeededNoiseIsReproducible) {
  const auto b = PolicyBundle::make(sim::TaskKind::kFlocking, 28, 16, 2, 1e-4, 1e-3, 3);
  const auto o = obs_of(28, 1.0);
  NoiseState noise{std::mt19937_64(77), 0.8};
  const auto a = act(b, o, true, &noise);

  const num::Vector mu = b.actor(Eigen::Map<const num::Vector>(o.data(), 28));
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  const double ex = std::clamp(mu(0) + 0.8 * n(rng), -1.0, 1.0);
  const double ey = std::clamp(mu(1) + 0.8 * n(rng), -1.0, 1.0);
  EXPECT_EQ(a, (sim::Vec2{ex, ey}));
}

TEST(Act, DimensionMismatch) {
  const auto b = PolicyBundle::make(sim::TaskKind::kFlocking, 28, 16, 2, 1e-4, 1e-3, 3);
  EXPECT_THROW(act(b, obs_of(27, 1.0), false, nullptr), InvalidInput);
}

TEST(Policy, LocalCriticArity) {
  const auto b = PolicyBundle::make(sim::TaskKind::kAdversarial, 28, 8, 2, 1e-4, 1e-3, 1);
  EXPECT_EQ(b.critic.spec.input_dim, 30);
  EXPECT_EQ(b.actor.spec.output_dim, 2);
  EXPECT_NO_THROW(b.check());
}

TEST(TrainStep, NoOpOnSmallBuffer) {
  auto b = PolicyBundle::make(sim::TaskKind::kFlocking, 4, 8, 1, 1e-4, 1e-3, 1);
  const auto before = b.actor.weights.flatten();
  ReplayBuffer buf(100, 4, 1);
  EXPECT_FALSE(train_step(b, buf, {0.99, 0.01, 8}).has_value());
  EXPECT_EQ(b.actor.weights.flatten(), before);
}

TEST(TrainStep, ZeroDiscountRegressesToReward) {
  auto b = PolicyBundle::make(sim::TaskKind::kFlocking, 4, 16, 2, 1e-4, 1e-3, 7);
  ReplayBuffer buf(10, 4, 1);
  const std::vector<double> o{0.2, -0.1, 0.4, 0.3};
  buf.push(o, {0.1, -0.2}, 1.0, o, false);
  for (int k = 0; k < 2000; ++k) train_step(b, buf, {0.0, 0.01, 1});
  const auto batch = buf.gather(std::vector<std::size_t>{0});
  const double q = b.critic.batch(critic_input(batch.obs, batch.action))(0, 0);
  EXPECT_NEAR(q, 1.0, 0.05);
}

TEST(TrainStep, TauOneCopiesOnline) {
  auto b = PolicyBundle::make(sim::TaskKind::kFlocking, 4, 8, 2, 1e-3, 1e-3, 2);
  ReplayBuffer buf(10, 4, 1);
  const std::vector<double> o{0.2, -0.1, 0.4, 0.3};
  for (int k = 0; k < 4; ++k) buf.push(o, {0.1, -0.2}, k, o, k == 3);
  ASSERT_TRUE(train_step(b, buf, {0.9, 1.0, 4}).has_value());
  EXPECT_EQ(b.actor_target.weights.flatten(), b.actor.weights.flatten());
  EXPECT_EQ(b.critic_target.weights.flatten(), b.critic.weights.flatten());
}

TEST(TrainStep, TargetDriftShrinksWithFrozenOnline) {
  const auto b = PolicyBundle::make(sim::TaskKind::kFlocking, 4, 8, 2, 1e-3, 1e-3, 2);
  auto target = num::init_weights(b.actor.spec, num::InitScheme::kUniformScaled, 99);
  double prev = weight_distance(target, b.actor.weights);
  for (int k = 0; k < 50; ++k) {
    soft_update(target, b.actor.weights, 0.01);
    const double d = weight_distance(target, b.actor.weights);
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(TrainStep, ActorGradientMatchesFiniteDifference) {
  auto b = PolicyBundle::make(sim::TaskKind::kFlocking, 3, 5, 2, 1e-4, 1e-3, 12);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  num::Matrix obs(3, 6);
  for (Eigen::Index i = 0; i < obs.size(); ++i) obs.data()[i] = n(rng);
  const auto analytic = actor_loss_gradient(b, obs).flatten();
  const auto numeric = num::finite_difference_gradient(
      [&](const num::NetWeights& w) {
        PolicyBundle p = b;
        p.actor.weights = w;
        double loss = 0.0;
        actor_loss_gradient(p, obs, &loss);
        return loss;
      },
      b.actor.weights, 1e-6);
  EXPECT_LT(num::max_relative_error(analytic, numeric.flatten(), 1e-6), 1e-3);
}

TEST(TrainConfig, Validation) {
  auto c = TrainConfig::defaults(sim::TaskKind::kAdversarial);
  EXPECT_EQ(c.hidden_size, 128);
  EXPECT_EQ(c.hidden_layers, 2);
  c.gamma = 1.0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c.gamma = 0.99;
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c.tau = 1.0;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.sigma_at(0), 0.8);
  EXPECT_NEAR(c.sigma_at(c.episodes - 1), 0.08, 1e-12);
}

TEST(TrainConfig, JsonKeyPaths) {
  Json j{{"gamma", "high"}};
  try {
    train_config_from_json(j, TrainConfig{}, "train");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key_path(), "train.gamma");
  }
  const auto back = train_config_from_json(to_json(TrainConfig{}), TrainConfig{});
  EXPECT_EQ(to_json(back), to_json(TrainConfig{}));
}

TrainConfig tiny_config(sim::TaskKind kind) {
  auto c = TrainConfig::defaults(kind);
  c.episodes = 2;
  c.episode_len = 30;
  c.batch = 32;
  c.hidden_size = 16;
  c.hidden_layers = 2;
  c.seed = 8;
  return c;
}

TEST(TrainSkill, ZeroEpisodesKeepsInitialWeights) {
  auto c = tiny_config(sim::TaskKind::kFlocking);
  c.episodes = 0;
  const auto task = sim::TaskFeature::flocking(1, 0, 0.4, 3);
  const auto world = default_training_world({sim::Boundary::kFixed, 6}, task, 6);
  const auto rec = train_skill("s", world, c);
  const auto fresh = make_untrained_skill("s", world.env, task, c);
  EXPECT_TRUE(rec.curve.empty());
  EXPECT_EQ(rec.policy.actor.weights.flatten(), fresh.policy.actor.weights.flatten());
}

TEST(TrainSkill, DeterministicAndWarmStartKeepsShapes) {
  const auto c = tiny_config(sim::TaskKind::kAdversarial);
  const auto task = sim::TaskFeature::adversarial(1, 0, 1, 3, 0.3);
  const auto world = default_training_world({sim::Boundary::kPeriodic, 6}, task, 4);
  const auto a = train_skill("a", world, c);
  const auto b = train_skill("a", world, c);
  ASSERT_EQ(a.curve.size(), 2u);
  EXPECT_GT(a.curve[1].updates, 0);
  EXPECT_EQ(a.policy.actor.weights.flatten(), b.policy.actor.weights.flatten());
  EXPECT_EQ(a.curve[1].mean_reward, b.curve[1].mean_reward);

  auto warm_cfg = c;
  warm_cfg.hidden_size = 64;  // ignored in favour of the source architecture
  warm_cfg.episodes = 0;
  const auto w0 = train_skill("w", world, warm_cfg, &a);
  EXPECT_EQ(w0.policy.actor.weights.flatten(), a.policy.actor.weights.flatten());
  EXPECT_EQ(w0.parent, "a");
  warm_cfg.episodes = 1;
  const auto w1 = train_skill("w", world, warm_cfg, &a);
  EXPECT_EQ(w1.policy.actor.spec, a.policy.actor.spec);
  EXPECT_EQ(w1.policy.actor_opt.first_moment.parameter_count(),
            a.policy.actor.weights.parameter_count());
}

TEST(TrainSkill, RejectsMismatchedWarmStart) {
  const auto c = tiny_config(sim::TaskKind::kFlocking);
  const auto task = sim::TaskFeature::flocking(1, 0, 0.4, 3);
  const auto world = default_training_world({sim::Boundary::kFixed, 6}, task, 6);
  const auto adv = make_untrained_skill("adv", world.env, sim::TaskFeature::adversarial(1, 0, 1, 3, 0.3),
                                        tiny_config(sim::TaskKind::kAdversarial));
  EXPECT_THROW(train_skill("x", world, c, &adv), InvalidInput);
}

TEST(Evaluate, SameSeedSameMetricsAndKindCheck) {
  const auto task = sim::TaskFeature::flocking(1, 0, 0.4, 3);
  const auto world = default_training_world({sim::Boundary::kFixed, 6}, task, 6);
  const auto rec = make_untrained_skill("s", world.env, task, tiny_config(sim::TaskKind::kFlocking));
  EvalConfig ec{.episodes = 3, .episode_len = 60, .seed = 4};
  const auto m1 = evaluate_skill(rec, world, ec);
  const auto m2 = evaluate_skill(rec, world, ec);
  EXPECT_EQ(m1.mean_reward, m2.mean_reward);
  EXPECT_EQ(m1.neighbor_error, m2.neighbor_error);
  EXPECT_TRUE(std::isfinite(m1.neighbor_error));

  const auto adv_world =
      default_training_world(world.env, sim::TaskFeature::adversarial(1, 0, 1, 3, 0.3), 4);
  EXPECT_THROW(evaluate_skill(rec, adv_world, ec), InvalidInput);
}

TEST(Persistence, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "sgswarm_marl_roundtrip";
  std::filesystem::remove_all(dir);
  auto rec = make_untrained_skill("floc_x", {sim::Boundary::kPeriodic, 6},
                                  sim::TaskFeature::flocking(1, 0, 0.8, 4), tiny_config(sim::TaskKind::kFlocking));
  rec.curve.push_back({0, -1.25, 0.5, -0.25, 0.8, 3});
  rec.parent = "floc_y";
  save_skill(rec, dir);
  const auto back = load_skill(dir);
  EXPECT_EQ(back.name, rec.name);
  EXPECT_EQ(back.env, rec.env);
  EXPECT_EQ(back.task, rec.task);
  EXPECT_EQ(back.parent, "floc_y");
  EXPECT_EQ(back.policy.actor.weights.flatten(), rec.policy.actor.weights.flatten());
  EXPECT_EQ(back.policy.critic.weights.flatten(), rec.policy.critic.weights.flatten());
  ASSERT_EQ(back.curve.size(), 1u);
  EXPECT_EQ(back.curve[0].mean_reward, -1.25);
  std::filesystem::remove(dir / "critic.netbin");
  EXPECT_THROW(load_skill(dir), IntegrityError);
  std::filesystem::remove_all(dir);
}

TEST(Persistence, WarmStartFromDiskMatchesInMemory) {
  const auto dir = std::filesystem::temp_directory_path() / "sgswarm_marl_warm_disk";
  std::filesystem::remove_all(dir);
  const auto task = sim::TaskFeature::flocking(1, 0, 0.4, 3);
  const auto world = default_training_world({sim::Boundary::kFixed, 6}, task, 5);
  const auto c = tiny_config(sim::TaskKind::kFlocking);
  const auto src = train_skill("src", world, c);
  ASSERT_GT(weight_distance(src.policy.actor.weights, src.policy.actor_target.weights), 0.0);
  save_skill(src, dir);
  const auto loaded = load_skill(dir);
  auto wc = c;
  wc.seed = 11;
  const auto a = train_skill("w", world, wc, &src);
  const auto b = train_skill("w", world, wc, &loaded);
  EXPECT_EQ(a.policy.actor.weights.flatten(), b.policy.actor.weights.flatten());
  EXPECT_EQ(a.curve.back().mean_reward, b.curve.back().mean_reward);
  std::filesystem::remove_all(dir);
}

TEST(TrainSkills, ParallelMatchesSerial) {
  const auto task = sim::TaskFeature::flocking(1, 0, 0.4, 3);
  const auto world = default_training_world({sim::Boundary::kFixed, 6}, task, 5);
  auto c = tiny_config(sim::TaskKind::kFlocking);
  std::vector<TrainJob> jobs{{"a", world, c}, {"b", world, c}};
  jobs[1].config.seed = 9;
  const auto par = train_skills(jobs, 2);
  const auto ser = train_skill("b", world, jobs[1].config);
  EXPECT_EQ(par[1].policy.actor.weights.flatten(), ser.policy.actor.weights.flatten());
}

}  // namespace
}  // namespace sgswarm::marl
