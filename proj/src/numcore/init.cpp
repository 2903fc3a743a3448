#include "sgswarm/numcore/init.hpp"

#include <algorithm>
#include <cmath>

namespace sgswarm::num {

Matrix orthogonal_matrix(int rows, int cols, std::mt19937_64& rng) {
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(big, small);
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(big, small);
  const Matrix r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int k = 0; k < small; ++k) {
    if (r(k, k) < 0.0) q.col(k) *= -1.0;
  }
  if (rows >= cols) return q;
  return q.transpose();
}

NetWeights init_weights(const NetSpec& spec, InitScheme scheme, std::uint64_t seed) {
  NetWeights w = NetWeights::zeros(spec);
  std::mt19937_64 rng(seed);
  const int n_layers = spec.layer_count();
  for (int k = 0; k < n_layers; ++k) {
    auto& layer = w.layers[k];
    if (scheme == InitScheme::kOrthogonal) {
      layer.weight = orthogonal_matrix(static_cast<int>(layer.weight.rows()),
                                       static_cast<int>(layer.weight.cols()), rng);
      continue;
    }
    const double fan_in = static_cast<double>(layer.weight.cols());
    const double limit = k + 1 < n_layers ? std::sqrt(6.0 / fan_in) : std::sqrt(3.0 / fan_in);
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = uniform(rng);
    }
  }
  return w;
}

}  // namespace sgswarm::num
