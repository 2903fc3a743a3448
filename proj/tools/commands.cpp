#include "commands.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sgswarm/error.hpp"
#include "sgswarm/marl/skill.hpp"
#include "sgswarm/orchestrator/run.hpp"
#include "sgswarm/skillgraph/bundle.hpp"
#include "sgswarm/skillgraph/query.hpp"
#include "sgswarm/swarmsim/config_io.hpp"

namespace sgswarm::cli {

namespace fs = std::filesystem;

namespace {

void require(const std::string& value, const std::string& option) {
  if (value.empty()) throw ConfigError(option, "is required");
}

template <class F>
auto as_config_error(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const InvalidInput& e) {
    throw ConfigError(path, e.what());
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string env_string(const sim::EnvFeature& env) {
  const auto v = env.values();
  return format_values({v.begin(), v.end()});
}

void print_decision(const graph::DispatchDecision& d) {
  fmt::print("decision: {}", graph::to_string(d.band));
  for (const auto& m : d.members) fmt::print(" {} (w={:.4f})", m.name, m.weight);
  fmt::print("\n");
}

Json decision_json(const graph::DispatchDecision& d) {
  Json members = Json::array();
  for (const auto& m : d.members) members.push_back({{"skill", m.name}, {"weight", m.weight}});
  return {{"band", graph::to_string(d.band)}, {"members", members}};
}

}  // namespace

int train_skill(const GlobalOptions& g, const std::vector<std::string>& argv) {
  if (g.config.empty()) throw ConfigError("--config", "train-skill needs a config file");
  const Json cfg = load_config(g);
  const auto name = json_get<std::string>(cfg, "name", "config");
  sim::WorldConfig world;
  if (cfg.contains("world")) {
    world = sim::world_config_from_json(cfg.at("world"), "config.world");
  } else {
    if (!cfg.contains("env")) throw ConfigError("config.env", "missing required key");
    if (!cfg.contains("task")) throw ConfigError("config.task", "missing required key");
    const auto env = sim::env_feature_from_json(cfg.at("env"), "config.env");
    const auto task = sim::task_feature_from_json(cfg.at("task"), "config.task");
    const int team_size = json_get_or<int>(cfg, "team_size", 10, "config");
    const int leaders = json_get_or<int>(cfg, "leaders", 1, "config");
    world = as_config_error("config", [&] { return marl::default_training_world(env, task, team_size, leaders); });
  }
  const auto kind = world.teams.at(0).task.kind;
  auto train = marl::train_config_from_json(cfg.value("train", Json::object()), marl::TrainConfig::defaults(kind),
                                            "config.train");
  if (g.seed) train.seed = *g.seed;
  as_config_error("config.train", [&] { train.validate(); return 0; });

  RunManifest manifest("train-skill", argv, g.out);
  manifest.add_config(g.config);
  manifest.add_seed(train.seed);
  fs::create_directories(g.out);
  const auto record = marl::train_skill(name, world, train, nullptr, [&](const marl::CurvePoint& p) {
    if (p.episode % 10 == 0 || p.episode + 1 == train.episodes) {
      spdlog::info("{} episode {} reward {:.3f} sigma {:.3f}", name, p.episode, p.mean_reward, p.sigma);
    }
  });
  const fs::path dir = g.out / name;
  marl::save_skill(record, dir);
  manifest.add_output(dir);
  manifest.write();
  double tail = 0.0;
  const int n = std::min<int>(10, static_cast<int>(record.curve.size()));
  for (int k = 0; k < n; ++k) tail += record.curve[record.curve.size() - 1 - k].mean_reward;
  fmt::print("trained {} ({} episodes, last-{} mean reward {:.3f}) -> {}\n", name, record.curve.size(), n,
             n ? tail / n : 0.0, dir.string());
  return 0;
}

int build_graph(const GlobalOptions& g, const BuildGraphArgs& a, const std::vector<std::string>& argv) {
  require(a.registry, "--registry");
  const auto reg = orch::SkillRegistry::open(a.registry);
  auto entries = reg.skill_entries();
  if (entries.empty()) throw std::runtime_error("registry " + a.registry + " holds no skills");
  const Json cfg = load_config(g);
  auto settings = graph::graph_settings_from_json(cfg.value("graph", cfg), graph::GraphSettings{}, "config.graph");
  if (g.seed) settings.seed = *g.seed;
  as_config_error("config.graph", [&] { settings.validate(); return 0; });

  RunManifest manifest("build-graph", argv, g.out);
  if (!g.config.empty()) manifest.add_config(g.config);
  manifest.add_input(fs::path(a.registry) / "registry.json");
  manifest.add_seed(settings.seed);
  fs::create_directories(g.out);

  auto model = graph::GraphModel::make(entries, settings);
  const auto samples = graph::build_samples(model.skills, {settings.delta, settings.max_negatives_per_positive, settings.seed});
  const auto counts = graph::count_samples(samples);
  fmt::print("{} skills, samples: {} positive, {} negative, {} soft\n", model.skill_count(), counts.positive,
             counts.negative, counts.soft);
  const auto report = graph::train_graph(model, samples, [&](int it, double loss) {
    if (it % 50 == 0) spdlog::info("iteration {} loss {:.6f}", it, loss);
  });
  model.trained = true;
  const auto q = graph::evaluate_samples(model, samples);

  const fs::path bundle = g.out / "bundle";
  graph::save_graph(model, bundle);
  std::string loss_csv = "iteration,loss\n";
  for (std::size_t k = 0; k < report.loss.size(); ++k) loss_csv += fmt::format("{},{:.9g}\n", k, report.loss[k]);
  write_file_atomic(g.out / "loss.csv", loss_csv);
  const Json quality = {{"positive_above_alpha_high", q.positive_above},
                        {"negative_below_0.10", q.negative_below},
                        {"soft_within_1-delta+0.05", q.soft_within},
                        {"final_loss", report.loss.empty() ? 0.0 : report.loss.back()}};
  write_file_atomic(g.out / "quality.json", quality.dump(2) + "\n");
  manifest.add_output(bundle);
  manifest.add_output(g.out / "loss.csv");
  manifest.add_output(g.out / "quality.json");
  manifest.write();
  fmt::print("positives > {:.2f}: {:.3f}  negatives < 0.10: {:.3f}  softs within bound: {:.3f}\n",
             settings.alpha_high, q.positive_above, q.negative_below, q.soft_within);
  fmt::print("bundle -> {}\n", bundle.string());
  return 0;
}

int query(const GlobalOptions& g, const QueryArgs& a, const std::vector<std::string>& argv) {
  require(a.bundle, "--bundle");
  require(a.env, "--env");
  require(a.task, "--task");
  const auto env = parse_env(a.env);
  const auto task = parse_task(a.task);
  if (a.top < 1) throw ConfigError("--top", "must be >= 1");
  const auto model = graph::load_graph(a.bundle);
  const auto table = graph::query(model, env, task);
  const auto decision =
      graph::dispatch(table, model.settings.alpha_high, model.settings.alpha_low, model.settings.max_blend);

  RunManifest manifest("query", argv, g.out);
  manifest.add_input(a.bundle);
  fs::create_directories(g.out);
  write_file_atomic(g.out / "scores.csv", graph::score_table_csv(table));
  Json dj = decision_json(decision);
  dj["env"] = env.values();
  dj["task"] = task.values();
  write_file_atomic(g.out / "decision.json", dj.dump(2) + "\n");
  manifest.add_output(g.out / "scores.csv");
  manifest.add_output(g.out / "decision.json");
  manifest.write();

  fmt::print("query env ({}) task ({})\n", env_string(env),
             format_values(task.values()));
  fmt::print("{:>4}  {:<18} {:>8} {:>8} {:>8}\n", "rank", "skill", "S_env", "S_task", "S");
  const int n = std::min<int>(a.top, static_cast<int>(table.entries.size()));
  for (int k = 0; k < n; ++k) {
    const auto& e = table.entries[k];
    fmt::print("{:>4}  {:<18} {:>8.4f} {:>8.4f} {:>8.4f}\n", k + 1, e.name, e.s_env, e.s_task, e.s);
  }
  print_decision(decision);
  return 0;
}

int run_scenario(const GlobalOptions& g, const RunScenarioArgs& a, const std::vector<std::string>& argv) {
  require(a.bundle, "--bundle");
  require(a.registry, "--registry");
  if (a.seeds < 1) throw ConfigError("--seeds", "must be >= 1");
  orch::ScenarioSpec spec;
  if (!a.scenario.empty()) {
    spec = orch::load_scenario(a.scenario);
  } else if (a.preset == "blend") {
    spec = orch::blend_scenario(a.team_size);
  } else if (a.preset == "in-library") {
    spec = orch::in_library_scenario(a.team_size);
  } else {
    throw ConfigError("--preset", "unknown preset '" + a.preset + "' (expected blend or in-library)");
  }
  const Json cfg = load_config(g);
  orch::RunOptions options;
  options.allow_finetune = g.allow_finetune;
  options.finetune_config =
      marl::train_config_from_json(cfg.value("finetune", Json::object()), marl::TrainConfig{}, "config.finetune");
  options.finetune_team_size = json_get_or<int>(cfg, "finetune_team_size", options.finetune_team_size, "config");
  if (!a.trajectories) spec.record_every = 0;

  const auto reg = orch::SkillRegistry::open(a.registry);
  const auto model = graph::load_graph(a.bundle);
  std::vector<std::uint64_t> seeds;
  const std::uint64_t base = g.seed_or(0);
  for (int k = 0; k < a.seeds; ++k) seeds.push_back(base + static_cast<std::uint64_t>(k));

  RunManifest manifest("run-scenario", argv, g.out);
  if (!a.scenario.empty()) manifest.add_config(a.scenario);
  if (!g.config.empty()) manifest.add_config(g.config);
  manifest.add_input(a.bundle);
  manifest.add_input(fs::path(a.registry) / "registry.json");
  for (auto s : seeds) manifest.add_seed(s);
  fs::create_directories(g.out);

  const auto runs = orch::run_scenarios(spec, reg, model, seeds, g.threads, options);

  write_file_atomic(g.out / "scenario.json", orch::to_json(spec).dump(2) + "\n");
  orch::write_decisions_jsonl(g.out / "decisions.jsonl", runs);
  orch::write_stage_summary_csv(g.out / "stages.csv", runs);
  manifest.add_output(g.out / "scenario.json");
  manifest.add_output(g.out / "decisions.jsonl");
  manifest.add_output(g.out / "stages.csv");
  std::vector<orch::DecisionLog> logs;
  int truncated = 0;
  for (const auto& r : runs) {
    logs.push_back(r.decisions);
    truncated += r.truncated ? 1 : 0;
    if (a.trajectories) {
      const auto path = g.out / fmt::format("trajectory_{}.csv", r.seed);
      orch::write_trajectory_csv(path, r);
      manifest.add_output(path);
    }
    for (const auto& ft : r.finetuned) {
      const auto dir = g.out / "finetuned" / fmt::format("seed{}", r.seed) / ft.name;
      marl::save_skill(ft, dir);
      manifest.add_output(dir);
    }
    for (const auto& d : r.decisions) {
      fmt::print("seed {} stage {} task ({}): {} [{}] expected [{}] {}{}\n", r.seed, d.stage,
                 format_values(d.task.values()), graph::to_string(d.dispatch.band),
                 fmt::join(orch::dispatched_set(d.dispatch), ","), fmt::join(d.expected, ","),
                 d.success ? "ok" : "MISS", d.note.empty() ? "" : " (" + d.note + ")");
    }
    if (r.truncated) fmt::print("seed {} truncated: {}\n", r.seed, r.diagnostic);
  }
  int n_total = 0;
  int n_succ = 0;
  for (const auto& l : logs) {
    n_total += static_cast<int>(l.size());
    n_succ += static_cast<int>(std::count_if(l.begin(), l.end(), [](const auto& d) { return d.success; }));
  }
  Json summary = {{"runs", runs.size()}, {"decisions", n_total}, {"successful", n_succ}, {"truncated_runs", truncated}};
  if (n_total > 0) summary["rho_succ"] = orch::decision_success_rate(logs);
  write_file_atomic(g.out / "summary.json", summary.dump(2) + "\n");
  manifest.add_output(g.out / "summary.json");
  manifest.write();
  if (n_total == 0) {
    fmt::print("no decisions were made\n");
  } else {
    fmt::print("rho_succ = {:.2f} ({}/{} decisions over {} runs)\n", orch::decision_success_rate(logs), n_succ,
               n_total, runs.size());
  }
  return 0;
}

namespace {

struct Check {
  std::string metric;
  double value;
  double threshold;
  bool pass;
  std::string relation;
};

int eval_bundle(const GlobalOptions& g, const EvalArgs& a, const std::vector<std::string>& metrics,
                RunManifest& manifest) {
  const auto model = graph::load_graph(a.bundle);
  const std::uint64_t seed = g.seed_or(model.settings.seed);
  const auto samples =
      graph::build_samples(model.skills, {model.settings.delta, model.settings.max_negatives_per_positive, seed});
  std::vector<Check> checks;
  for (const auto& m : metrics) {
    if (m == "samples") {
      const auto q = graph::evaluate_samples(model, samples);
      checks.push_back({"positive_above_alpha_high", q.positive_above, 0.95, q.positive_above >= 0.95, ">="});
      checks.push_back({"negative_below_0.10", q.negative_below, 0.95, q.negative_below >= 0.95, ">="});
      checks.push_back({"soft_within_bound", q.soft_within, 0.90, q.soft_within >= 0.90, ">="});
    } else if (m == "gradients") {
      std::vector<graph::Triple> batch = samples;
      std::mt19937_64 rng(seed);
      std::shuffle(batch.begin(), batch.end(), rng);
      batch.resize(std::min<std::size_t>(batch.size(), 64));
      const auto r = graph::check_graph_gradients(model, batch, 1e-6, 64, seed);
      const std::pair<const char*, double> groups[] = {{"gradient.skill_embeddings", r.skill_embeddings},
                                                       {"gradient.relation_normals", r.relation_normals},
                                                       {"gradient.relation_translations", r.relation_translations},
                                                       {"gradient.env_encoder", r.env_encoder},
                                                       {"gradient.task_encoder", r.task_encoder}};
      for (const auto& [name, err] : groups) checks.push_back({name, err, 1e-4, err <= 1e-4, "<="});
    } else {
      throw ConfigError("--metrics", "unknown bundle metric '" + m + "' (expected samples, gradients)");
    }
  }
  std::string csv = "metric,value,threshold,verdict\n";
  bool ok = true;
  for (const auto& c : checks) {
    fmt::print("{} {} {:.6g} ({} {:g})\n", c.pass ? "PASS" : "FAIL", c.metric, c.value, c.relation, c.threshold);
    csv += fmt::format("{},{:.9g},{:g},{}\n", c.metric, c.value, c.threshold, c.pass ? "PASS" : "FAIL");
    ok = ok && c.pass;
  }
  write_file_atomic(g.out / "metrics.csv", csv);
  manifest.add_seed(seed);
  manifest.add_output(g.out / "metrics.csv");
  manifest.write();
  return ok ? 0 : 1;
}

int eval_skill(const GlobalOptions& g, const EvalArgs& a, const std::vector<std::string>& metrics,
               RunManifest& manifest) {
  for (const auto& m : metrics) {
    if (m != "reward" && m != "win-rate" && m != "neighbor-error") {
      throw ConfigError("--metrics", "unknown skill metric '" + m + "' (expected reward, win-rate, neighbor-error)");
    }
  }
  const auto record = marl::load_skill(a.skill);
  const auto world = as_config_error("--team-size", [&] {
    return marl::default_training_world(record.env, record.task, a.team_size);
  });
  marl::EvalConfig ec;
  ec.episodes = a.episodes;
  ec.episode_len = a.episode_len > 0 ? a.episode_len : (record.task.kind == sim::TaskKind::kAdversarial ? 400 : 200);
  ec.seed = g.seed_or(0);
  if (ec.episodes < 1) throw ConfigError("--episodes", "must be >= 1");
  const auto r = marl::evaluate_skill(record, world, ec);
  std::string csv = "metric,value\n";
  bool finite = true;
  for (const auto& m : metrics) {
    const double v = m == "reward" ? r.mean_reward : m == "win-rate" ? r.win_rate : r.neighbor_error;
    fmt::print("{} {:.6g}\n", m, v);
    csv += fmt::format("{},{:.9g}\n", m, v);
    if (m != "neighbor-error" || record.task.kind == sim::TaskKind::kFlocking) finite = finite && std::isfinite(v);
  }
  write_file_atomic(g.out / "metrics.csv", csv);
  manifest.add_seed(ec.seed);
  manifest.add_output(g.out / "metrics.csv");
  manifest.write();
  return finite ? 0 : 1;
}

}  // namespace

int eval(const GlobalOptions& g, const EvalArgs& a, const std::vector<std::string>& argv) {
  if (a.skill.empty() == a.bundle.empty()) throw ConfigError("--skill/--bundle", "give exactly one target");
  auto metrics = split_list(a.metrics);
  if (metrics.empty()) {
    metrics = a.skill.empty() ? std::vector<std::string>{"samples", "gradients"}
                              : std::vector<std::string>{"reward", "win-rate", "neighbor-error"};
  }
  RunManifest manifest("eval", argv, g.out);
  manifest.add_input(a.skill.empty() ? a.bundle : a.skill);
  fs::create_directories(g.out);
  return a.skill.empty() ? eval_bundle(g, a, metrics, manifest) : eval_skill(g, a, metrics, manifest);
}

int registry(const GlobalOptions& g, const RegistryArgs& a) {
  require(a.registry, "--registry");
  if (a.action == "init") {
    orch::SkillRegistry::create(a.registry);
    fmt::print("registry ready at {}\n", a.registry);
    return 0;
  }
  if (a.action == "seed-reference") {
    auto reg = orch::SkillRegistry::create(a.registry);
    std::uint64_t seed = g.seed_or(0);
    int added = 0;
    for (const auto& e : graph::reference_library()) {
      if (reg.contains(e.name)) continue;
      auto c = marl::TrainConfig::defaults(e.task.kind);
      c.seed = seed++;
      reg.add(marl::make_untrained_skill(e.name, e.env, e.task, c));
      ++added;
    }
    fmt::print("added {} placeholder skills ({} total)\n", added, reg.entries().size());
    return 0;
  }
  if (a.action == "add") {
    if (a.paths.empty()) throw ConfigError("registry add", "expected one or more skill directories");
    auto reg = orch::SkillRegistry::open(a.registry);
    for (const auto& p : a.paths) {
      const auto& e = reg.add_directory(p);
      fmt::print("added {} id {} provenance {}{}\n", e.name, e.id, orch::to_string(e.provenance),
                 e.parent.empty() ? "" : " parent " + e.parent);
    }
    return 0;
  }
  const auto reg = orch::SkillRegistry::open(a.registry);
  if (a.action == "list") {
    fmt::print("{:>4}  {:<24} {:<11} {:<18} {:<8} {}\n", "id", "name", "provenance", "parent", "env", "task");
    for (const auto& e : reg.entries()) {
      fmt::print("{:>4}  {:<24} {:<11} {:<18} {:<8} {}\n", e.id, e.name, orch::to_string(e.provenance),
                 e.parent.empty() ? "-" : e.parent, env_string(e.env),
                 format_values(e.task.values()));
    }
    return 0;
  }
  if (a.action == "verify") {
    reg.verify();
    fmt::print("ok: {} skills verified\n", reg.entries().size());
    return 0;
  }
  if (a.action == "gc") {
    const auto files = reg.gc(!a.apply);
    for (const auto& f : files) fmt::print("{} {}\n", a.apply ? "removed" : "would remove", f.string());
    fmt::print("{} unreferenced file(s){}\n", files.size(), a.apply ? " removed" : " (dry run; pass --apply to delete)");
    return 0;
  }
  if (a.action == "lineage") {
    if (a.paths.size() != 1) throw ConfigError("registry lineage", "expected one skill name");
    fmt::print("{}\n", fmt::join(reg.lineage(a.paths[0]), " <- "));
    return 0;
  }
  throw ConfigError("registry", "unknown action '" + a.action + "'");
}

}  // namespace sgswarm::cli
