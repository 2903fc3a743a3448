#include "sgswarm/marl/skill.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "sgswarm/error.hpp"
#include "sgswarm/numcore/serialization.hpp"

namespace sgswarm::marl {

namespace {

constexpr int kSkillFormatVersion = 1;

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct EpisodeOutcome {
  double mean_return = 0.0;
  bool win = false;
  double error_sum = 0.0;
  long error_samples = 0;
};

bool is_learner(const sim::AgentState& a) { return a.team == sim::Team::kGreen && !a.is_leader; }

double nearest_teammate_distance(const sim::World& w, const sim::AgentState& a) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : w.agents()) {
    if (b.id == a.id || !b.alive || b.team != a.team) continue;
    best = std::min(best, w.displacement(a.p, b.p).norm());
  }
  return best;
}

/// One episode. `after_step` runs once per environment step after the
/// transitions of that step are stored.
template <class AfterStep>
EpisodeOutcome rollout(sim::World& w, const PolicyBundle& policy, int len, bool explore,
                       NoiseState* noise, double kp, double kv, ReplayBuffer* buffer,
                       int error_window, AfterStep&& after_step) {
  const auto n = w.agents().size();
  const bool adversarial = w.team_task(sim::Team::kGreen).kind == sim::TaskKind::kAdversarial;
  const bool has_red = w.has_team(sim::Team::kRed);
  std::vector<double> returns(n, 0.0);
  std::vector<std::vector<double>> obs(n);
  std::vector<sim::Vec2> actions(n);
  int learners = 0;
  for (const auto& a : w.agents()) learners += is_learner(a) ? 1 : 0;

  EpisodeOutcome out;
  for (int t = 0; t < len; ++t) {
    for (const auto& a : w.agents()) {
      actions[a.id] = {};
      if (!a.alive) continue;
      if (is_learner(a)) {
        obs[a.id] = w.observe(a.id);
        actions[a.id] = act(policy, obs[a.id], explore, noise);
      } else if (a.is_leader) {
        actions[a.id] = w.leader_policy(a.id);
      } else {
        actions[a.id] = w.scripted_pursuit(a.id, kp, kv);
      }
    }
    std::vector<char> alive_before(n);
    for (const auto& a : w.agents()) alive_before[a.id] = a.alive ? 1 : 0;

    const auto result = w.step(actions);

    bool over = false;
    if (adversarial && has_red) {
      const int red = w.living_count(sim::Team::kRed);
      const int green = w.living_count(sim::Team::kGreen);
      out.win = red == 0;
      over = red == 0 || green == 0;
    }
    for (const auto& a : w.agents()) {
      if (!is_learner(a) || !alive_before[a.id]) continue;
      returns[a.id] += result.rewards[a.id];
      if (buffer != nullptr) {
        const bool done = !a.alive || over;
        const auto next = a.alive ? w.observe(a.id) : obs[a.id];
        buffer->push(obs[a.id], actions[a.id], result.rewards[a.id], next, done);
      }
    }
    if (!adversarial && t >= len - error_window) {
      const double d_ref = w.team_task(sim::Team::kGreen).d_ref;
      for (const auto& a : w.agents()) {
        if (!a.alive || a.team != sim::Team::kGreen) continue;
        const double d = nearest_teammate_distance(w, a);
        if (!std::isfinite(d)) continue;
        out.error_sum += std::abs(d - d_ref) / d_ref;
        ++out.error_samples;
      }
    }
    after_step();
    if (over) break;
  }
  double total = 0.0;
  for (const auto& a : w.agents()) {
    if (is_learner(a)) total += returns[a.id];
  }
  out.mean_return = learners > 0 ? total / learners : 0.0;
  return out;
}

void check_world(const sim::WorldConfig& world, sim::TaskKind kind) {
  if (world.teams.empty()) throw InvalidInput("training world has no green team");
  if (world.teams[0].task.kind != kind) {
    throw InvalidInput("skill task kind " + sim::to_string(kind) + " does not match the world's green task " +
                       sim::to_string(world.teams[0].task.kind));
  }
  if (kind == sim::TaskKind::kAdversarial && world.teams.size() < 2) {
    throw InvalidInput("adversarial training needs a red team");
  }
  if (static_cast<int>(world.teams[0].leader_paths.size()) >= world.teams[0].count) {
    throw InvalidInput("green team has no learning robots");
  }
}

}  // namespace

TrainConfig TrainConfig::defaults(sim::TaskKind kind) {
  TrainConfig c;
  if (kind == sim::TaskKind::kAdversarial) {
    c.hidden_size = 128;
    c.hidden_layers = 2;
    c.episodes = 400;
  }
  return c;
}

void TrainConfig::validate() const {
  if (episodes < 0) throw InvalidInput("episodes must be >= 0");
  if (episode_len < 1) throw InvalidInput("episode_len must be >= 1");
  if (batch < 1) throw InvalidInput("batch must be >= 1");
  if (buffer_capacity < batch) throw InvalidInput("buffer capacity must be >= batch");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidInput("gamma must lie in (0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidInput("tau must lie in (0, 1]");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw InvalidInput("learning rates must be positive");
  if (sigma0 < 0.0 || !(sigma_decay > 0.0)) throw InvalidInput("noise schedule must be non-negative");
  if (train_every < 1) throw InvalidInput("train_every must be >= 1");
  if (hidden_size < 1 || hidden_layers < 1) throw InvalidInput("hidden size/layers must be >= 1");
}

double TrainConfig::sigma_at(int episode) const {
  if (episodes <= 1) return sigma0;
  const double frac = static_cast<double>(episode) / static_cast<double>(episodes - 1);
  return sigma0 * std::pow(sigma_decay, std::clamp(frac, 0.0, 1.0));
}

Json to_json(const TrainConfig& c) {
  return Json{{"episodes", c.episodes},         {"episode_len", c.episode_len},
              {"batch", c.batch},               {"buffer_capacity", c.buffer_capacity},
              {"hidden_size", c.hidden_size},   {"hidden_layers", c.hidden_layers},
              {"gamma", c.gamma},               {"tau", c.tau},
              {"actor_lr", c.actor_lr},         {"critic_lr", c.critic_lr},
              {"sigma0", c.sigma0},             {"sigma_decay", c.sigma_decay},
              {"train_every", c.train_every},   {"pursuit_kp", c.pursuit_kp},
              {"pursuit_kv", c.pursuit_kv},     {"seed", c.seed}};
}

TrainConfig train_config_from_json(const Json& j, const TrainConfig& base, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  TrainConfig c = base;
  c.episodes = json_get_or(j, "episodes", c.episodes, path);
  c.episode_len = json_get_or(j, "episode_len", c.episode_len, path);
  c.batch = json_get_or(j, "batch", c.batch, path);
  c.buffer_capacity = json_get_or(j, "buffer_capacity", c.buffer_capacity, path);
  c.hidden_size = json_get_or(j, "hidden_size", c.hidden_size, path);
  c.hidden_layers = json_get_or(j, "hidden_layers", c.hidden_layers, path);
  c.gamma = json_get_or(j, "gamma", c.gamma, path);
  c.tau = json_get_or(j, "tau", c.tau, path);
  c.actor_lr = json_get_or(j, "actor_lr", c.actor_lr, path);
  c.critic_lr = json_get_or(j, "critic_lr", c.critic_lr, path);
  c.sigma0 = json_get_or(j, "sigma0", c.sigma0, path);
  c.sigma_decay = json_get_or(j, "sigma_decay", c.sigma_decay, path);
  c.train_every = json_get_or(j, "train_every", c.train_every, path);
  c.pursuit_kp = json_get_or(j, "pursuit_kp", c.pursuit_kp, path);
  c.pursuit_kv = json_get_or(j, "pursuit_kv", c.pursuit_kv, path);
  c.seed = json_get_or(j, "seed", c.seed, path);
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(path, e.what());
  }
  return c;
}

SkillRecord make_untrained_skill(const std::string& name, const sim::EnvFeature& env,
                                 const sim::TaskFeature& task, const TrainConfig& config, int n_h) {
  config.validate();
  task.validate();
  SkillRecord r;
  r.name = name;
  r.env = env;
  r.task = task;
  r.config = config;
  r.policy = PolicyBundle::make(task.kind, sim::observation_size(n_h), config.hidden_size,
                                config.hidden_layers, config.actor_lr, config.critic_lr, config.seed);
  return r;
}

sim::WorldConfig default_training_world(const sim::EnvFeature& env, const sim::TaskFeature& task,
                                        int team_size, int leaders) {
  sim::WorldConfig w;
  w.env = env;
  const double L = env.side;
  sim::TeamConfig green;
  green.count = team_size;
  green.task = task;
  if (task.kind == sim::TaskKind::kFlocking) {
    green.spawn_center = {0.3 * L, 0.5 * L};
    green.spawn_half_extent = 0.12 * L;
    for (int k = 0; k < leaders; ++k) {
      green.leader_paths.push_back({{{0.3 * L, 0.5 * L}, {0.7 * L, 0.5 * L}, {0.7 * L, 0.75 * L}}, 0.3});
    }
    w.teams.push_back(green);
  } else {
    green.spawn_center = {0.3 * L, 0.5 * L};
    green.spawn_half_extent = 0.12 * L;
    sim::TeamConfig red = green;
    red.spawn_center = {0.7 * L, 0.5 * L};
    w.teams.push_back(green);
    w.teams.push_back(red);
  }
  w.validate();
  return w;
}

SkillRecord train_skill(const std::string& name, const sim::WorldConfig& world,
                        const TrainConfig& config, const SkillRecord* warm_start,
                        const ProgressFn& progress) {
  config.validate();
  world.validate();
  const auto& task = world.teams.at(0).task;
  check_world(world, task.kind);

  SkillRecord rec;
  rec.name = name;
  rec.env = world.env;
  rec.task = task;
  rec.config = config;
  const int obs_dim = sim::observation_size(world.n_h);
  if (warm_start != nullptr) {
    if (warm_start->policy.kind != task.kind) {
      throw InvalidInput("warm-start skill '" + warm_start->name + "' has a different task kind");
    }
    if (warm_start->policy.observation_dim() != obs_dim) {
      throw InvalidInput("warm-start skill '" + warm_start->name + "' expects a different observation length");
    }
    rec.policy = warm_start->policy;
    // Targets restart from the online nets, as they would after load_skill.
    rec.policy.actor_target = rec.policy.actor;
    rec.policy.critic_target = rec.policy.critic;
    rec.policy.check();
    rec.policy.reset_optimizers(config.actor_lr, config.critic_lr);
    rec.config.hidden_size = rec.policy.actor.spec.hidden_size;
    rec.config.hidden_layers = rec.policy.actor.spec.hidden_layers;
    rec.parent = warm_start->name;
  } else {
    rec.policy = PolicyBundle::make(task.kind, obs_dim, config.hidden_size, config.hidden_layers,
                                    config.actor_lr, config.critic_lr, config.seed);
  }

  ReplayBuffer buffer(config.buffer_capacity, obs_dim, mix(config.seed, 1));
  NoiseState noise{std::mt19937_64(mix(config.seed, 2)), config.sigma0};
  const auto settings = config.update_settings();
  long env_steps = 0;

  for (int ep = 0; ep < config.episodes; ++ep) {
    sim::WorldConfig wc = world;
    wc.seed = mix(config.seed, 1000 + static_cast<std::uint64_t>(ep));
    sim::World w(wc);
    noise.sigma = config.sigma_at(ep);
    CurvePoint pt;
    pt.episode = ep;
    pt.sigma = noise.sigma;
    const auto outcome =
        rollout(w, rec.policy, config.episode_len, true, &noise, config.pursuit_kp, config.pursuit_kv,
                &buffer, 0, [&] {
                  ++env_steps;
                  if (env_steps % config.train_every != 0) return;
                  try {
                    if (const auto l = train_step(rec.policy, buffer, settings)) {
                      pt.critic_loss += l->critic;
                      pt.actor_loss += l->actor;
                      ++pt.updates;
                    }
                  } catch (const DivergenceError& e) {
                    throw DivergenceError("skill '" + name + "' diverged in episode " +
                                          std::to_string(ep) + ": " + e.what());
                  }
                });
    pt.mean_reward = outcome.mean_return;
    if (pt.updates > 0) {
      pt.critic_loss /= pt.updates;
      pt.actor_loss /= pt.updates;
    }
    rec.curve.push_back(pt);
    spdlog::debug("{} ep {} reward {:.3f} critic {:.4f} actor {:.4f} sigma {:.3f}", name, ep,
                  pt.mean_reward, pt.critic_loss, pt.actor_loss, pt.sigma);
    if (progress) progress(pt);
  }
  return rec;
}

EvalMetrics evaluate_skill(const SkillRecord& record, const sim::WorldConfig& world,
                           const EvalConfig& config) {
  world.validate();
  if (world.teams.empty() || world.teams[0].task.kind != record.policy.kind) {
    throw InvalidInput("skill '" + record.name + "' is a " + sim::to_string(record.policy.kind) +
                       " skill but the world's green task differs");
  }
  if (config.episodes < 1 || config.episode_len < 1) throw InvalidInput("evaluation needs episodes >= 1");
  EvalMetrics m;
  m.episodes = config.episodes;
  double error_sum = 0.0;
  long error_samples = 0;
  int wins = 0;
  for (int ep = 0; ep < config.episodes; ++ep) {
    sim::WorldConfig wc = world;
    wc.seed = mix(config.seed, 5000 + static_cast<std::uint64_t>(ep));
    sim::World w(wc);
    const auto o = rollout(w, record.policy, config.episode_len, false, nullptr, config.pursuit_kp,
                           config.pursuit_kv, nullptr, config.error_window, [] {});
    m.mean_reward += o.mean_return;
    wins += o.win ? 1 : 0;
    error_sum += o.error_sum;
    error_samples += o.error_samples;
  }
  m.mean_reward /= config.episodes;
  m.win_rate = static_cast<double>(wins) / config.episodes;
  m.neighbor_error = error_samples > 0 ? error_sum / static_cast<double>(error_samples)
                                       : std::numeric_limits<double>::quiet_NaN();
  return m;
}

void save_skill(const SkillRecord& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  num::save_net(dir / "actor", r.policy.actor.spec, r.policy.actor.weights, r.config.seed);
  num::save_net(dir / "critic", r.policy.critic.spec, r.policy.critic.weights, r.config.seed);
  std::ostringstream csv;
  csv.precision(17);
  csv << "episode,mean_reward,critic_loss,actor_loss,sigma,updates\n";
  for (const auto& p : r.curve) {
    csv << p.episode << ',' << p.mean_reward << ',' << p.critic_loss << ',' << p.actor_loss << ','
        << p.sigma << ',' << p.updates << '\n';
  }
  write_file_atomic(dir / "curve.csv", csv.str());
  const auto env = r.env.values();
  const Json meta{{"format_version", kSkillFormatVersion},
                  {"name", r.name},
                  {"task_kind", sim::to_string(r.task.kind)},
                  {"env", std::vector<double>(env.begin(), env.end())},
                  {"task", r.task.values()},
                  {"parent", r.parent},
                  {"episodes_trained", r.curve.size()},
                  {"train_config", to_json(r.config)}};
  write_file_atomic(dir / "skill.meta", meta.dump(2) + "\n");
}

SkillRecord load_skill(const std::filesystem::path& dir) {
  const auto meta_path = dir / "skill.meta";
  if (!std::filesystem::exists(meta_path)) throw IntegrityError("missing " + meta_path.string());
  Json meta;
  try {
    meta = read_json_file(meta_path);
  } catch (const ConfigError& e) {
    throw IntegrityError(e.what());
  }
  SkillRecord r;
  try {
    if (meta.at("format_version").get<int>() != kSkillFormatVersion) {
      throw IntegrityError("unsupported skill format in " + meta_path.string());
    }
    r.name = meta.at("name").get<std::string>();
    const auto env = meta.at("env").get<std::vector<double>>();
    r.env = sim::EnvFeature::from_values(env);
    const auto task = meta.at("task").get<std::vector<double>>();
    r.task = sim::TaskFeature::from_values(task);
    r.parent = meta.value("parent", "");
    r.config = train_config_from_json(meta.at("train_config"), TrainConfig::defaults(r.task.kind),
                                      "train_config");
  } catch (const Json::exception& e) {
    throw IntegrityError("malformed " + meta_path.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw IntegrityError("malformed " + meta_path.string() + ": " + e.what());
  }
  auto actor = num::load_net(dir / "actor");
  auto critic = num::load_net(dir / "critic");
  r.policy.kind = r.task.kind;
  r.policy.actor = {actor.spec, std::move(actor.weights)};
  r.policy.critic = {critic.spec, std::move(critic.weights)};
  r.policy.actor_target = r.policy.actor;
  r.policy.critic_target = r.policy.critic;
  try {
    r.policy.check();
  } catch (const InvalidInput& e) {
    throw IntegrityError(dir.string() + ": " + e.what());
  }
  r.policy.reset_optimizers(r.config.actor_lr, r.config.critic_lr);

  std::ifstream in(dir / "curve.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    CurvePoint p;
    char c = 0;
    ss >> p.episode >> c >> p.mean_reward >> c >> p.critic_loss >> c >> p.actor_loss >> c >> p.sigma >>
        c >> p.updates;
    if (!ss) throw IntegrityError("malformed curve row in " + (dir / "curve.csv").string());
    r.curve.push_back(p);
  }
  return r;
}

std::vector<SkillRecord> train_skills(const std::vector<TrainJob>& jobs, int threads) {
  std::vector<SkillRecord> out(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        out[i] = train_skill(jobs[i].name, jobs[i].world, jobs[i].config, jobs[i].warm_start);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace sgswarm::marl
