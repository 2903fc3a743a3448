#pragma once

#include <string>
#include <vector>

#include "cli_support.hpp"

namespace sgswarm::cli {

struct BuildGraphArgs {
  std::string registry;
};

struct QueryArgs {
  std::string bundle;
  std::string env;
  std::string task;
  int top = 16;
};

struct RunScenarioArgs {
  std::string scenario;
  std::string preset = "blend";
  int team_size = 10;
  std::string bundle;
  std::string registry;
  int seeds = 1;
  bool trajectories = true;
};

struct EvalArgs {
  std::string skill;
  std::string bundle;
  std::string metrics;
  int episodes = 50;
  int episode_len = 0;  // 0: 200 for flocking, 400 for adversarial
  int team_size = 10;
};

struct RegistryArgs {
  std::string action;
  std::string registry;
  std::vector<std::string> paths;
  bool apply = false;
};

// Each returns the process exit code; errors propagate as exceptions.
int train_skill(const GlobalOptions& g, const std::vector<std::string>& argv);
int build_graph(const GlobalOptions& g, const BuildGraphArgs& a, const std::vector<std::string>& argv);
int query(const GlobalOptions& g, const QueryArgs& a, const std::vector<std::string>& argv);
int run_scenario(const GlobalOptions& g, const RunScenarioArgs& a, const std::vector<std::string>& argv);
int eval(const GlobalOptions& g, const EvalArgs& a, const std::vector<std::string>& argv);
int registry(const GlobalOptions& g, const RegistryArgs& a);

}  // namespace sgswarm::cli
