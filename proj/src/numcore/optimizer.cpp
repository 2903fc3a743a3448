#include "sgswarm/numcore/optimizer.hpp"

#include <cmath>

#include "sgswarm/error.hpp"

namespace sgswarm::num {

namespace {

template <class T>
void update_block(OptimizerKind kind, double lr, const AdamSettings& adam, long step, T& param,
                  T& m, T& v, const T& g) {
  if (param.rows() != g.rows() || param.cols() != g.cols()) {
    throw InvalidInput("optimizer: gradient shape does not match parameters");
  }
  if (kind == OptimizerKind::kSgd) {
    param.noalias() -= lr * g;
    return;
  }
  m = adam.beta1 * m + (1.0 - adam.beta1) * g;
  v = adam.beta2 * v + (1.0 - adam.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(step));
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + adam.epsilon);
}

}  // namespace

OptimizerState OptimizerState::make(OptimizerKind kind, double learning_rate,
                                    const NetWeights& like) {
  if (!(learning_rate > 0.0)) throw InvalidInput("learning rate must be > 0");
  OptimizerState s;
  s.kind = kind;
  s.learning_rate = learning_rate;
  if (kind == OptimizerKind::kAdam) {
    s.first_moment = NetWeights::zeros_like(like);
    s.second_moment = NetWeights::zeros_like(like);
  }
  return s;
}

void optimizer_step(OptimizerState& opt, NetWeights& weights, const NetWeights& gradients) {
  if (weights.layers.size() != gradients.layers.size()) {
    throw InvalidInput("optimizer: gradient layer count does not match parameters");
  }
  if (opt.kind == OptimizerKind::kAdam && opt.first_moment.layers.size() != weights.layers.size()) {
    throw InvalidInput("optimizer: moment buffers do not match parameters");
  }
  ++opt.step;
  for (std::size_t k = 0; k < weights.layers.size(); ++k) {
    auto& w = weights.layers[k];
    const auto& g = gradients.layers[k];
    if (opt.kind == OptimizerKind::kSgd) {
      Matrix dummy;
      Vector dummy_v;
      update_block(opt.kind, opt.learning_rate, opt.adam, opt.step, w.weight, dummy, dummy, g.weight);
      update_block(opt.kind, opt.learning_rate, opt.adam, opt.step, w.bias, dummy_v, dummy_v, g.bias);
    } else {
      auto& m = opt.first_moment.layers[k];
      auto& v = opt.second_moment.layers[k];
      update_block(opt.kind, opt.learning_rate, opt.adam, opt.step, w.weight, m.weight, v.weight,
                   g.weight);
      update_block(opt.kind, opt.learning_rate, opt.adam, opt.step, w.bias, m.bias, v.bias, g.bias);
    }
  }
}

MatrixOptimizer MatrixOptimizer::make(OptimizerKind kind, double learning_rate, const Matrix& like) {
  if (!(learning_rate > 0.0)) throw InvalidInput("learning rate must be > 0");
  MatrixOptimizer o;
  o.kind = kind;
  o.learning_rate = learning_rate;
  o.first_moment = Matrix::Zero(like.rows(), like.cols());
  o.second_moment = Matrix::Zero(like.rows(), like.cols());
  return o;
}

void MatrixOptimizer::apply(Matrix& param, const Matrix& gradient) {
  ++step;
  update_block(kind, learning_rate, adam, step, param, first_moment, second_moment, gradient);
}

}  // namespace sgswarm::num
