#include "sgswarm/numcore/gradient_check.hpp"

#include <algorithm>
#include <cmath>

#include "sgswarm/error.hpp"

namespace sgswarm::num {

std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& loss_fn, std::span<const double> params,
    double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidInput("finite difference epsilon must be > 0");
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + epsilon;
    const double up = loss_fn(x);
    x[i] = saved - epsilon;
    const double down = loss_fn(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

NetWeights finite_difference_gradient(const std::function<double(const NetWeights&)>& loss_fn,
                                      const NetWeights& weights, double epsilon) {
  NetWeights probe = weights;
  auto flat_loss = [&](std::span<const double> p) {
    probe.assign_flat(p);
    return loss_fn(probe);
  };
  const auto flat = weights.flatten();
  const auto g = finite_difference_gradient(flat_loss, flat, epsilon);
  NetWeights out = NetWeights::zeros_like(weights);
  out.assign_flat(g);
  return out;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw InvalidInput("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace sgswarm::num
