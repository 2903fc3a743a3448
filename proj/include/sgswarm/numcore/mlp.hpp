#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sgswarm::num {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Negative-side slope of every hidden Leaky-ReLU.
inline constexpr double kLeakySlope = 0.01;

enum class OutputActivation { kNone, kTanh };

/// Shape of a fully connected network. Hidden layers always use Leaky-ReLU;
/// actors use a tanh output, critics and encoders a linear one.
struct NetSpec {
  int input_dim = 1;
  int hidden_size = 1;
  int hidden_layers = 1;
  int output_dim = 1;
  OutputActivation output_activation = OutputActivation::kNone;

  /// Throws InvalidInput if any dimension is < 1.
  void validate() const;
  int layer_count() const { return hidden_layers + 1; }
  bool operator==(const NetSpec&) const = default;
};

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Parameters of one network. Flat order is layer-major; within a layer the
/// weight matrix comes first in row-major order, followed by the bias.
struct NetWeights {
  std::vector<Layer> layers;

  static NetWeights zeros(const NetSpec& spec);
  static NetWeights zeros_like(const NetWeights& other);

  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> values);
  bool all_finite() const;
  /// Throws InvalidInput when layer shapes disagree with `spec`.
  void check_shapes(const NetSpec& spec) const;

  NetWeights& operator+=(const NetWeights& other);
  NetWeights& operator*=(double s);
};

/// Per-sample gradient returned by `backward`.
struct Gradient {
  NetWeights params;
  Vector input;
};

/// Batched gradient; parameter gradients are summed over the batch columns.
struct BatchGradient {
  NetWeights params;
  Matrix input;  // input_dim x batch
};

/// Activations kept by `forward_batch` for a later backward pass.
struct ForwardCache {
  std::vector<Matrix> inputs;  // inputs[k] feeds layer k
  std::vector<Matrix> pre;     // pre-activation of layer k
};

Vector forward(const NetSpec& spec, const NetWeights& weights, const Vector& input);

/// Columns of `input` are samples. When `cache` is non-null the intermediate
/// activations are stored for `backward_batch`.
Matrix forward_batch(const NetSpec& spec, const NetWeights& weights, const Matrix& input,
                     ForwardCache* cache = nullptr);

Gradient backward(const NetSpec& spec, const NetWeights& weights, const Vector& input,
                  const Vector& output_gradient);

BatchGradient backward_batch(const NetSpec& spec, const NetWeights& weights,
                             const ForwardCache& cache, const Matrix& output_gradient);

/// Convenience owner of a spec and its weights.
struct Net {
  NetSpec spec;
  NetWeights weights;

  Vector operator()(const Vector& x) const { return forward(spec, weights, x); }
  Matrix batch(const Matrix& x, ForwardCache* cache = nullptr) const {
    return forward_batch(spec, weights, x, cache);
  }
};

}  // namespace sgswarm::num
