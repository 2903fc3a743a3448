#pragma once

#include <array>
#include <string>
#include <vector>

#include "sgswarm/json_util.hpp"
#include "sgswarm/swarmsim/features.hpp"

namespace sgswarm::graph {

enum class EntityKind { kEnvironment, kTask };

/// Encoder input: environment (y, L) or a task padded to five slots.
struct EntityFeature {
  EntityKind kind = EntityKind::kEnvironment;
  std::vector<double> values;
  sim::TaskKind task_kind = sim::TaskKind::kFlocking;  // tasks only

  static EntityFeature environment(const sim::EnvFeature& env);
  static EntityFeature task(const sim::TaskFeature& task);
  std::string label() const;
  auto operator<=>(const EntityFeature&) const = default;
};

/// Weights for the attribute-difference similarity. Flocking and adversarial
/// tasks can use different weight vectors over the padded slots.
struct DeltaWeights {
  std::string profile = "aligned";
  std::array<double, 5> task_adversarial{0, 0, 0, 3, 1};
  std::array<double, 5> task_flocking{0, 0, 3, 1, 0};
  std::array<double, 2> env{0.95, 0.05};

  /// "padded-slot": flocking uses the adversarial weights by padded slot.
  /// "aligned": flocking weights shifted onto (d_ref, r_perc).
  static DeltaWeights named(const std::string& profile);
  void validate() const;
};

Json to_json(const DeltaWeights& w);
/// Accepts a profile name string or an object with explicit weight arrays.
DeltaWeights delta_weights_from_json(const Json& j, const std::string& path);

/// sum_j k_j |a_j - b_j| / sum_j k_j, clamped to 1. Both entities must have
/// the same kind (and task kind). Throws InvalidInput otherwise.
double delta(const EntityFeature& a, const EntityFeature& b, const DeltaWeights& weights);

}  // namespace sgswarm::graph
