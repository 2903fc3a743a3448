// sgswarm command-line entry point.
#include <exception>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "sgswarm/error.hpp"
#include "sgswarm/log.hpp"

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace sgswarm;
  configure_logging();
  const std::vector<std::string> args(argv, argv + argc);

  CLI::App app{"Skill-graph swarm toolkit: train skills, build and query the skill graph, run scenarios"};
  app.require_subcommand(1);
  cli::GlobalOptions g;
  std::uint64_t seed = 0;
  std::string out = g.out.string();
  auto* seed_opt = app.add_option("--seed", seed, "Base random seed");
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_flag("--allow-finetune", g.allow_finetune, "Train fine-tuned skills when a query lands in the finetune band");
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train-skill", "Train one skill from a config file");

  cli::BuildGraphArgs bg;
  auto* build = app.add_subcommand("build-graph", "Build and train a skill graph over a registry");
  build->add_option("--registry", bg.registry, "Skill registry directory")->required();

  cli::QueryArgs qa;
  auto* query = app.add_subcommand("query", "Score every skill for an (env, task) query");
  query->add_option("--bundle", qa.bundle, "Graph bundle directory")->required();
  query->add_option("--env", qa.env, "Environment feature y,L (e.g. 1,6)")->required();
  query->add_option("--task", qa.task, "Task feature: 4 values flocking, 5 adversarial")->required();
  query->add_option("--top", qa.top, "Rows to print")->capture_default_str();

  cli::RunScenarioArgs ra;
  auto* run = app.add_subcommand("run-scenario", "Run the multi-stage scenario over several seeds");
  run->add_option("--scenario", ra.scenario, "Scenario JSON file (overrides --preset)");
  run->add_option("--preset", ra.preset, "Built-in scenario: blend or in-library")->capture_default_str();
  run->add_option("--team-size", ra.team_size, "Robots per team for presets")->capture_default_str();
  run->add_option("--bundle", ra.bundle, "Graph bundle directory")->required();
  run->add_option("--registry", ra.registry, "Skill registry directory")->required();
  run->add_option("--seeds", ra.seeds, "Number of seeded runs")->capture_default_str();
  bool no_traj = false;
  run->add_flag("--no-trajectory", no_traj, "Skip per-run trajectory CSVs");

  cli::EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a skill or a graph bundle");
  eval->add_option("--skill", ea.skill, "Skill directory");
  eval->add_option("--bundle", ea.bundle, "Graph bundle directory");
  eval->add_option("--metrics", ea.metrics,
                   "Comma list. Skill: reward,win-rate,neighbor-error. Bundle: samples,gradients");
  eval->add_option("--episodes", ea.episodes, "Evaluation episodes")->capture_default_str();
  eval->add_option("--episode-len", ea.episode_len, "Steps per episode (default 200 flocking, 400 adversarial)");
  eval->add_option("--team-size", ea.team_size, "Robots per team")->capture_default_str();

  cli::RegistryArgs rg;
  auto* registry = app.add_subcommand("registry", "Manage a skill registry");
  registry->add_option("action", rg.action, "init | seed-reference | add | list | verify | gc | lineage")
      ->required()
      ->check(CLI::IsMember({"init", "seed-reference", "add", "list", "verify", "gc", "lineage"}));
  registry->add_option("paths", rg.paths, "Skill directories (add) or a skill name (lineage)");
  registry->add_option("--registry", rg.registry, "Registry directory")->required();
  registry->add_flag("--apply", rg.apply, "gc: delete instead of listing");

  for (auto* sub : {train, build, query, run, eval, registry}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }
  if (seed_opt->count() > 0) g.seed = seed;
  g.out = out;
  ra.trajectories = !no_traj;

  try {
    if (*train) return cli::train_skill(g, args);
    if (*build) return cli::build_graph(g, bg, args);
    if (*query) return cli::query(g, qa, args);
    if (*run) return cli::run_scenario(g, ra, args);
    if (*eval) return cli::eval(g, ea, args);
    if (*registry) return cli::registry(g, rg);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsageError;
}
