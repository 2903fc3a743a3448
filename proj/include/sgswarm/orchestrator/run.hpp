#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sgswarm/marl/skill.hpp"
#include "sgswarm/orchestrator/registry.hpp"
#include "sgswarm/orchestrator/scenario.hpp"
#include "sgswarm/skillgraph/query.hpp"

namespace sgswarm::orch {

struct Decision {
  int stage = 0;
  long tick = 0;
  std::vector<sim::Team> teams;  // teams the decision was installed for
  sim::EnvFeature env;
  sim::TaskFeature task;
  std::string table_digest;  // sha256 of the score table CSV
  std::vector<graph::ScoreEntry> top;  // first few rows of the table
  graph::DispatchDecision dispatch;
  std::vector<std::string> expected;
  bool success = false;
  std::string note;  // e.g. finetune deferred
};

using DecisionLog = std::vector<Decision>;

/// Sorted member names of a dispatch.
std::vector<std::string> dispatched_set(const graph::DispatchDecision& d);
/// True iff the dispatched set equals `expected` as a set.
bool decision_matches(const graph::DispatchDecision& d, const std::vector<std::string>& expected);

/// n_succ / n_total. Throws InvalidInput on an empty log.
double decision_success_rate(const DecisionLog& log);
double decision_success_rate(const std::vector<DecisionLog>& logs);

struct StageSummary {
  int stage = 0;
  std::string name;
  long entry_tick = 0;
  long exit_tick = 0;
  int green_alive = 0;  // at exit
  int red_alive = 0;
  std::string exit_reason;  // next-stage, completed, truncated
};

struct Frame {
  long tick = 0;
  int stage = 0;
  std::vector<sim::AgentState> agents;
};

struct ScenarioResult {
  std::uint64_t seed = 0;
  std::vector<Frame> trajectory;
  DecisionLog decisions;
  std::vector<StageSummary> stages;
  bool truncated = false;
  std::string diagnostic;  // why the run was truncated
  std::vector<marl::SkillRecord> finetuned;  // skills trained during the run
};

struct RunOptions {
  bool allow_finetune = false;
  marl::TrainConfig finetune_config;  // seed is overridden per run
  int finetune_team_size = 10;
  double pursuit_kp = 1.0;
  double pursuit_kv = 2.0;
};

/// Runs every stage in order on one world. At each stage entry the graph is
/// queried once per distinct task among living graph-query teams and the
/// dispatched policy is installed for those teams. Finetune decisions train
/// a warm-started skill when `allow_finetune` is set and otherwise run the
/// top-scoring skill.
ScenarioResult run_scenario(const ScenarioSpec& spec, const SkillRegistry& registry,
                            const graph::GraphModel& graph, std::uint64_t seed,
                            const RunOptions& options = {});

/// One run per seed on up to `threads` threads; results keep seed order.
std::vector<ScenarioResult> run_scenarios(const ScenarioSpec& spec, const SkillRegistry& registry,
                                          const graph::GraphModel& graph,
                                          const std::vector<std::uint64_t>& seeds, int threads,
                                          const RunOptions& options = {});

Json to_json(const Decision& d, std::uint64_t seed);
/// One JSON object per decision.
void write_decisions_jsonl(const std::filesystem::path& path, const std::vector<ScenarioResult>& runs);
void write_stage_summary_csv(const std::filesystem::path& path, const std::vector<ScenarioResult>& runs);
/// tick,stage,id,team,x,y,vx,vy,hp,alive
void write_trajectory_csv(const std::filesystem::path& path, const ScenarioResult& run);

}  // namespace sgswarm::orch
