#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sgswarm/skillgraph/similarity.hpp"

namespace sgswarm::graph {

enum class RelationId { kEnvToSkill = 0, kTaskToSkill = 1 };
enum class SampleKind { kPositive, kNegative, kSoft };

std::string to_string(RelationId r);
std::string to_string(SampleKind k);

/// A library skill as the graph sees it: identity and features only.
struct SkillEntry {
  std::string name;
  sim::EnvFeature env;
  sim::TaskFeature task;
  std::string record_path;  // optional location of the SkillRecord
};

/// Tail is a skill index or, for entity-as-tail corruptions, an entity whose
/// encoding stands in for the skill embedding.
using Tail = std::variant<int, EntityFeature>;

struct Triple {
  EntityFeature head;
  RelationId relation = RelationId::kEnvToSkill;
  Tail tail = 0;
  SampleKind kind = SampleKind::kPositive;
  double delta = 0.0;  // soft samples: target score at most 1 - delta

  bool operator==(const Triple&) const = default;
};

/// The 32-skill desk library: floc_1..8 and adve_1..8, each in a fixed and a
/// periodic 6 m arena, named like "floc_3_fixed".
std::vector<SkillEntry> reference_library();

struct SampleOptions {
  DeltaWeights weights;
  int max_negatives_per_positive = 4;
  std::uint64_t seed = 0;
};

/// Per skill: two positives. Per positive: the relation swap, then up to
/// max-1 further corruptions drawn (seeded) from wrong-tail skills of the
/// other task kind and entity-as-tail replacements by other same-kind
/// entities. Softs pair every skill with each other same-kind head entity
/// whose delta is positive. Duplicates are dropped; order is deterministic.
std::vector<Triple> build_samples(const std::vector<SkillEntry>& skills, const SampleOptions& options);

struct SampleCounts {
  int positive = 0;
  int negative = 0;
  int soft = 0;
};
SampleCounts count_samples(const std::vector<Triple>& samples);

}  // namespace sgswarm::graph
