#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sgswarm/json_util.hpp"
#include "sgswarm/swarmsim/world.hpp"

namespace sgswarm::orch {

enum class EntryCondition { kStart, kEncounter, kTeamEliminated };
std::string to_string(EntryCondition c);
EntryCondition entry_condition_from_string(const std::string& s);

enum class PolicySource { kGraphQuery, kScripted, kFixedSkill };
std::string to_string(PolicySource s);
PolicySource policy_source_from_string(const std::string& s);

struct TeamStage {
  sim::TaskFeature task;
  PolicySource source = PolicySource::kGraphQuery;
  std::string skill;                  // fixed-skill only
  std::vector<std::string> expected;  // graph-query only: skill names the decision should dispatch
};

struct Stage {
  std::string name;
  EntryCondition entry = EntryCondition::kStart;
  /// Steps spent in this stage. For every stage but the last, running out
  /// before the next entry condition holds truncates the run.
  int max_steps = 1000;
  /// Indexed by team (green, red). A team eliminated before the stage starts is skipped.
  std::vector<TeamStage> teams;
};

/// Scenario file schema:
///   world:  world config (see config_io.hpp); team tasks may be omitted and
///           are taken from the first stage
///   agents: optional explicit start states [[team, x, y, vx, vy, leader?], ...]
///           replacing the seeded spawn
///   record_every: trajectory stride in steps (0 = no trajectory)
///   stages: [{name, entry: start|encounter|team-eliminated, max_steps,
///             teams: [{task, source: graph-query|scripted|fixed-skill,
///                      skill, expected: [names]}, ...]}]
struct ScenarioSpec {
  sim::WorldConfig world;
  std::vector<sim::AgentState> agents;  // empty: seeded spawn
  std::vector<Stage> stages;
  int record_every = 1;

  const sim::EnvFeature& env() const { return world.env; }
  int team_count() const { return world.team_count(); }
  /// Throws ConfigError: first stage must be `start`, later stages strictly
  /// later conditions, one TeamStage per world team, sources complete.
  void validate() const;
};

ScenarioSpec scenario_from_json(const Json& j, const std::string& path = "scenario");
Json to_json(const ScenarioSpec& spec);
ScenarioSpec load_scenario(const std::filesystem::path& path);

/// Two teams of `team_size` in the fixed 6 m arena approaching each other
/// along diagonal leader paths; flocking (1,0,0.4,3), then battle
/// (1,0,1,3,0.3) against scripted pursuit, then flocking with `stage3_task`.
/// `stage3_expected` becomes the expected set of the last decision.
ScenarioSpec default_scenario(int team_size, const sim::TaskFeature& stage3_task,
                              std::vector<std::string> stage3_expected);
/// The three-stage experiment with the published stage-3 task (1,0,0.6,3),
/// expected to blend floc_4_fixed and floc_3_fixed.
ScenarioSpec blend_scenario(int team_size = 10);
/// Same with the in-library stage-3 task (1,0,0.8,3) -> floc_4_fixed.
ScenarioSpec in_library_scenario(int team_size = 10);

}  // namespace sgswarm::orch
