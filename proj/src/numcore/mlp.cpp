#include "sgswarm/numcore/mlp.hpp"

#include <cmath>
#include <string>

#include "sgswarm/error.hpp"

namespace sgswarm::num {

namespace {

Matrix leaky_relu(const Matrix& z) {
  return z.unaryExpr([](double x) { return x > 0.0 ? x : kLeakySlope * x; });
}

Matrix leaky_relu_grad(const Matrix& z) {
  return z.unaryExpr([](double x) { return x > 0.0 ? 1.0 : kLeakySlope; });
}

std::pair<int, int> layer_shape(const NetSpec& spec, int k) {
  const int in = k == 0 ? spec.input_dim : spec.hidden_size;
  const int out = k == spec.hidden_layers ? spec.output_dim : spec.hidden_size;
  return {out, in};
}

}  // namespace

void NetSpec::validate() const {
  if (input_dim < 1 || hidden_size < 1 || hidden_layers < 1 || output_dim < 1) {
    throw InvalidInput("NetSpec dimensions must all be >= 1");
  }
}

NetWeights NetWeights::zeros(const NetSpec& spec) {
  spec.validate();
  NetWeights w;
  w.layers.reserve(spec.layer_count());
  for (int k = 0; k < spec.layer_count(); ++k) {
    auto [out, in] = layer_shape(spec, k);
    w.layers.push_back({Matrix::Zero(out, in), Vector::Zero(out)});
  }
  return w;
}

NetWeights NetWeights::zeros_like(const NetWeights& other) {
  NetWeights w;
  w.layers.reserve(other.layers.size());
  for (const auto& l : other.layers) {
    w.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return w;
}

std::size_t NetWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<double> NetWeights::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) flat.push_back(l.bias(i));
  }
  return flat;
}

void NetWeights::assign_flat(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw InvalidInput("flat parameter vector has " + std::to_string(values.size()) +
                       " entries, expected " + std::to_string(parameter_count()));
  }
  std::size_t i = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = values[i++];
    }
    for (Eigen::Index j = 0; j < l.bias.size(); ++j) l.bias(j) = values[i++];
  }
}

bool NetWeights::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void NetWeights::check_shapes(const NetSpec& spec) const {
  if (static_cast<int>(layers.size()) != spec.layer_count()) {
    throw InvalidInput("weight layer count does not match NetSpec");
  }
  for (int k = 0; k < spec.layer_count(); ++k) {
    auto [out, in] = layer_shape(spec, k);
    const auto& l = layers[k];
    if (l.weight.rows() != out || l.weight.cols() != in || l.bias.size() != out) {
      throw InvalidInput("layer " + std::to_string(k) + " shape does not match NetSpec");
    }
  }
}

NetWeights& NetWeights::operator+=(const NetWeights& other) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    layers[k].weight += other.layers[k].weight;
    layers[k].bias += other.layers[k].bias;
  }
  return *this;
}

NetWeights& NetWeights::operator*=(double s) {
  for (auto& l : layers) {
    l.weight *= s;
    l.bias *= s;
  }
  return *this;
}

Matrix forward_batch(const NetSpec& spec, const NetWeights& weights, const Matrix& input,
                     ForwardCache* cache) {
  if (input.rows() != spec.input_dim) {
    throw InvalidInput("forward: input has " + std::to_string(input.rows()) +
                       " rows, expected " + std::to_string(spec.input_dim));
  }
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix a = input;
  const int n_layers = spec.layer_count();
  for (int k = 0; k < n_layers; ++k) {
    const auto& l = weights.layers[k];
    Matrix z = l.weight * a;
    z.colwise() += l.bias;
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(z);
    }
    if (k + 1 < n_layers) {
      a = leaky_relu(z);
    } else if (spec.output_activation == OutputActivation::kTanh) {
      a = z.array().tanh().matrix();
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Vector forward(const NetSpec& spec, const NetWeights& weights, const Vector& input) {
  if (input.size() != spec.input_dim) {
    throw InvalidInput("forward: input has length " + std::to_string(input.size()) +
                       ", expected " + std::to_string(spec.input_dim));
  }
  return forward_batch(spec, weights, Matrix(input), nullptr).col(0);
}

BatchGradient backward_batch(const NetSpec& spec, const NetWeights& weights,
                             const ForwardCache& cache, const Matrix& output_gradient) {
  if (output_gradient.rows() != spec.output_dim) {
    throw InvalidInput("backward: output gradient has " + std::to_string(output_gradient.rows()) +
                       " rows, expected " + std::to_string(spec.output_dim));
  }
  const int n_layers = spec.layer_count();
  if (static_cast<int>(cache.pre.size()) != n_layers ||
      cache.pre.back().cols() != output_gradient.cols()) {
    throw InvalidInput("backward: cache does not match the output gradient batch");
  }
  BatchGradient grad{NetWeights::zeros_like(weights), {}};
  Matrix delta;
  if (spec.output_activation == OutputActivation::kTanh) {
    const Matrix y = cache.pre.back().array().tanh().matrix();
    delta = output_gradient.cwiseProduct((1.0 - y.array().square()).matrix());
  } else {
    delta = output_gradient;
  }
  for (int k = n_layers - 1; k >= 0; --k) {
    const auto& l = weights.layers[k];
    grad.params.layers[k].weight.noalias() = delta * cache.inputs[k].transpose();
    grad.params.layers[k].bias = delta.rowwise().sum();
    Matrix upstream = l.weight.transpose() * delta;
    if (k > 0) {
      delta = upstream.cwiseProduct(leaky_relu_grad(cache.pre[k - 1]));
    } else {
      grad.input = std::move(upstream);
    }
  }
  return grad;
}

Gradient backward(const NetSpec& spec, const NetWeights& weights, const Vector& input,
                  const Vector& output_gradient) {
  if (output_gradient.size() != spec.output_dim) {
    throw InvalidInput("backward: output gradient has length " +
                       std::to_string(output_gradient.size()) + ", expected " +
                       std::to_string(spec.output_dim));
  }
  ForwardCache cache;
  forward_batch(spec, weights, Matrix(input), &cache);
  auto g = backward_batch(spec, weights, cache, Matrix(output_gradient));
  return {std::move(g.params), g.input.col(0)};
}

}  // namespace sgswarm::num
