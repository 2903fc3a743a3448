#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgswarm/marl/skill.hpp"
#include "sgswarm/skillgraph/model.hpp"

namespace sgswarm::graph {

struct ScoreEntry {
  int skill = -1;
  std::string name;
  double s_env = 0.0;
  double s_task = 0.0;
  double s = 0.0;  // s_env * s_task
};

/// Sorted by s descending, ties by skill index.
struct ScoreTable {
  std::vector<ScoreEntry> entries;
  const ScoreEntry& top() const;
};

ScoreTable query(const GraphModel& model, const sim::EnvFeature& env, const sim::TaskFeature& task);
std::string score_table_csv(const ScoreTable& table);

enum class Band { kReuse, kBlend, kFinetune };
std::string to_string(Band band);

struct DispatchMember {
  int skill = -1;
  std::string name;
  double weight = 1.0;
};

/// reuse and finetune carry exactly one member (weight 1); blend carries the
/// weighted band members.
struct DispatchDecision {
  Band band = Band::kReuse;
  std::vector<DispatchMember> members;
};

/// top > alpha_high: reuse. Otherwise skills with alpha_low < S <= alpha_high
/// (highest `max_blend` of them) blend with weights S_j / sum S. Otherwise
/// finetune the top skill.
DispatchDecision dispatch(const ScoreTable& table, double alpha_high, double alpha_low, int max_blend = 4);

/// Weighted sum of the member actors' actions, clipped to [-1, 1].
/// `skills` is aligned with `decision.members`.
sim::Vec2 blended_act(const DispatchDecision& decision, std::span<const marl::SkillRecord* const> skills,
                      std::span<const double> obs);

struct FinetuneResult {
  marl::SkillRecord tuned;
  std::optional<marl::SkillRecord> scratch;
};

/// Warm-starts training from `seed_skill`; with `with_baseline` also trains a
/// scratch policy under the same configuration.
FinetuneResult finetune(const DispatchDecision& decision, const marl::SkillRecord& seed_skill,
                        const std::string& name, const sim::WorldConfig& world,
                        const marl::TrainConfig& config, bool with_baseline, int threads = 1);

}  // namespace sgswarm::graph
