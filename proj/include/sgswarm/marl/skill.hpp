#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sgswarm/json_util.hpp"
#include "sgswarm/marl/policy.hpp"
#include "sgswarm/swarmsim/features.hpp"
#include "sgswarm/swarmsim/world.hpp"

namespace sgswarm::marl {

struct TrainConfig {
  int episodes = 300;
  int episode_len = 200;
  std::size_t batch = 512;
  std::size_t buffer_capacity = 500000;
  int hidden_size = 64;
  int hidden_layers = 3;
  double gamma = 0.99;
  double tau = 0.01;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double sigma0 = 0.8;
  double sigma_decay = 0.1;  // sigma ends at sigma_decay * sigma0 on the last episode
  int train_every = 1;       // env steps between updates once the buffer is warm
  double pursuit_kp = 1.0;   // scripted red team gains (adversarial)
  double pursuit_kv = 2.0;
  std::uint64_t seed = 0;

  /// Table defaults: flocking 64x3, adversarial 128x2.
  static TrainConfig defaults(sim::TaskKind kind);
  /// Throws InvalidInput when out of range (gamma in (0,1), tau in (0,1], ...).
  void validate() const;
  double sigma_at(int episode) const;
  UpdateSettings update_settings() const { return {gamma, tau, batch}; }
};

Json to_json(const TrainConfig& c);
/// Missing keys fall back to `base`.
TrainConfig train_config_from_json(const Json& j, const TrainConfig& base,
                                   const std::string& path = "train");

struct CurvePoint {
  int episode = 0;
  double mean_reward = 0.0;  // mean per-learner return
  double critic_loss = 0.0;  // mean over the episode's updates, 0 if none
  double actor_loss = 0.0;
  double sigma = 0.0;
  int updates = 0;
};

/// A trained policy together with the features it was trained under.
struct SkillRecord {
  std::string name;
  sim::EnvFeature env;
  sim::TaskFeature task;
  TrainConfig config;
  PolicyBundle policy;
  std::vector<CurvePoint> curve;
  std::string parent;  // name of the warm-start source, empty when trained from scratch
};

/// Initial weights and an empty curve.
SkillRecord make_untrained_skill(const std::string& name, const sim::EnvFeature& env,
                                 const sim::TaskFeature& task, const TrainConfig& config,
                                 int n_h = 6);

/// Standard desk-scale training arena. Flocking: one green team of
/// `team_size` robots, the first `leaders` following a straight path.
/// Adversarial: `team_size` versus `team_size`, red spawned opposite green.
sim::WorldConfig default_training_world(const sim::EnvFeature& env, const sim::TaskFeature& task,
                                        int team_size, int leaders = 1);

using ProgressFn = std::function<void(const CurvePoint&)>;

/// Trains the green team's shared policy in `world`. Red (when present) runs
/// scripted pursuit. With `warm_start` the policy weights are copied from that
/// record and only the optimizer moments are reset.
SkillRecord train_skill(const std::string& name, const sim::WorldConfig& world,
                        const TrainConfig& config, const SkillRecord* warm_start = nullptr,
                        const ProgressFn& progress = {});

struct EvalConfig {
  int episodes = 50;
  int episode_len = 200;
  int error_window = 50;  // trailing steps used for the neighbour-distance error
  std::uint64_t seed = 0;
  double pursuit_kp = 1.0;
  double pursuit_kv = 2.0;
};

struct EvalMetrics {
  double mean_reward = 0.0;
  double win_rate = 0.0;
  /// Flocking: mean over the trailing window and robots of |d_nn - d_ref| / d_ref,
  /// d_nn the distance to the nearest living teammate. NaN for adversarial.
  double neighbor_error = 0.0;
  int episodes = 0;
};

/// Noise-free rollouts. Throws InvalidInput when the record's task kind does
/// not match the world's green task.
EvalMetrics evaluate_skill(const SkillRecord& record, const sim::WorldConfig& world,
                           const EvalConfig& config);

/// Directory layout: skill.meta (JSON), curve.csv, actor.net*, critic.net*.
void save_skill(const SkillRecord& record, const std::filesystem::path& dir);
SkillRecord load_skill(const std::filesystem::path& dir);

struct TrainJob {
  std::string name;
  sim::WorldConfig world;
  TrainConfig config;
  const SkillRecord* warm_start = nullptr;
};

/// Runs independent jobs on up to `threads` worker threads. Results keep job
/// order. The first failure is rethrown after all workers stop.
std::vector<SkillRecord> train_skills(const std::vector<TrainJob>& jobs, int threads);

}  // namespace sgswarm::marl
