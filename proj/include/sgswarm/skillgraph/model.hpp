#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sgswarm/numcore/mlp.hpp"
#include "sgswarm/skillgraph/samples.hpp"

namespace sgswarm::graph {

struct GraphSettings {
  int dim = 96;
  int hidden_size = 256;
  int hidden_layers = 3;
  double lambda = 3.0;
  double init_scale = 0.3;  // initial norm of skill embeddings, translations and encoder outputs
  int iterations = 500;  // M
  int batch = 256;
  double encoder_lr = 1e-3;
  double embedding_lr = 0.1;
  double relation_lr = 1e-2;
  int warmup_iterations = 50;  // linear ramp of every learning rate
  double final_lr_ratio = 0.01;  // cosine decay ends at this fraction of the peak rate
  double alpha_high = 0.95;
  double alpha_low = 0.85;
  int max_blend = 4;
  int max_negatives_per_positive = 4;
  bool class_balanced = true;  // average each sample kind separately, then sum
  DeltaWeights delta = DeltaWeights::named("aligned");
  std::uint64_t seed = 0;

  void validate() const;
};

Json to_json(const GraphSettings& s);
GraphSettings graph_settings_from_json(const Json& j, const GraphSettings& base,
                                       const std::string& path = "graph");

/// Fixed affine map applied to raw features before an encoder.
struct InputScaling {
  num::Vector shift;
  num::Vector scale;

  static InputScaling identity(int n);
  /// Mean and standard deviation over the given rows; constant columns keep scale 1.
  static InputScaling fit(const std::vector<std::vector<double>>& rows);
  void apply(std::span<const double> raw, double* out) const;
};

struct GraphModel {
  GraphSettings settings;
  std::vector<SkillEntry> skills;
  num::Net env_encoder;   // 2 -> dim
  num::Net task_encoder;  // 5 -> dim
  InputScaling env_input;
  InputScaling task_input;
  num::Matrix skill_embeddings;  // dim x n_skills
  num::Matrix relation_normals;       // dim x 2, unit columns
  num::Matrix relation_translations;  // dim x 2
  bool trained = false;

  /// Seeded initialization: orthogonal skill embeddings and relation
  /// parameters, fan-in scaled encoders.
  static GraphModel make(std::vector<SkillEntry> skills, const GraphSettings& settings);

  int dim() const { return settings.dim; }
  int skill_count() const { return static_cast<int>(skills.size()); }
  num::Vector encode(const EntityFeature& feature) const;
  const InputScaling& input_scaling(EntityKind kind) const {
    return kind == EntityKind::kEnvironment ? env_input : task_input;
  }
  num::Vector normal(RelationId r) const { return relation_normals.col(static_cast<int>(r)); }
  num::Vector translation(RelationId r) const { return relation_translations.col(static_cast<int>(r)); }
  /// Score of one triple (raw formula, normals assumed unit).
  double score(const Triple& t) const;
  int skill_index(const std::string& name) const;
  void normalize_relations();
};

struct GraphGradient {
  num::NetWeights env_encoder;
  num::NetWeights task_encoder;
  num::Matrix skill_embeddings;
  num::Matrix relation_normals;
  num::Matrix relation_translations;
};

/// Per-sample loss: positive (S-1)^2, negative S^2, soft max(0, S-1+delta).
double sample_loss(SampleKind kind, double score, double delta);

/// Sum over the three sample classes of the class-mean loss in `batch` and, when `grad` is non-null, its gradient with
/// respect to every model parameter.
double graph_loss(const GraphModel& model, std::span<const Triple> batch, GraphGradient* grad);

/// Worst relative error of the analytic loss gradient against central
/// differences, per parameter group.
struct GradientCheckReport {
  double skill_embeddings = 0.0;
  double relation_normals = 0.0;
  double relation_translations = 0.0;
  double env_encoder = 0.0;
  double task_encoder = 0.0;
  std::size_t coordinates = 0;  // parameters probed in total

  double worst() const;
};

/// Probes every coordinate when `max_coords_per_group` is 0, otherwise a
/// seeded random subset of that size in each group.
GradientCheckReport check_graph_gradients(const GraphModel& model, std::span<const Triple> batch,
                                          double epsilon = 1e-6, int max_coords_per_group = 0,
                                          std::uint64_t seed = 0);

struct GraphTrainReport {
  std::vector<double> loss;  // per iteration
};

/// Adam over minibatches cut from reshuffled passes through `samples`;
/// relation normals are re-normalized after every step. Throws
/// DivergenceError on a non-finite loss.
GraphTrainReport train_graph(GraphModel& model, const std::vector<Triple>& samples,
                             const std::function<void(int, double)>& progress = {});

struct SampleQuality {
  double positive_above = 0.0;  // fraction of positives with S > alpha_high
  double negative_below = 0.0;  // fraction of negatives with S < 0.10
  double soft_within = 0.0;     // fraction of softs with S <= 1 - delta + 0.05
};
SampleQuality evaluate_samples(const GraphModel& model, const std::vector<Triple>& samples);

}  // namespace sgswarm::graph
