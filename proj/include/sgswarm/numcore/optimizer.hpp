#pragma once

#include "sgswarm/numcore/mlp.hpp"

namespace sgswarm::num {

enum class OptimizerKind { kSgd, kAdam };

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  AdamSettings adam;
  NetWeights first_moment;   // adam only
  NetWeights second_moment;  // adam only
  long step = 0;

  static OptimizerState make(OptimizerKind kind, double learning_rate, const NetWeights& like);
};

/// sgd: w <- w - lr * g. adam: bias-corrected Adam. Increments `opt.step`.
void optimizer_step(OptimizerState& opt, NetWeights& weights, const NetWeights& gradients);

/// Same update rules for a single dense parameter block (embeddings, relation
/// vectors). The caller owns the moment buffers.
struct MatrixOptimizer {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  AdamSettings adam;
  Matrix first_moment;
  Matrix second_moment;
  long step = 0;

  static MatrixOptimizer make(OptimizerKind kind, double learning_rate, const Matrix& like);
  void apply(Matrix& param, const Matrix& gradient);
};

}  // namespace sgswarm::num
