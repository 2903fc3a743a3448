#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sgswarm/numcore/mlp.hpp"

namespace sgswarm::num {

/// Central-difference estimate of d loss / d weights.
NetWeights finite_difference_gradient(const std::function<double(const NetWeights&)>& loss_fn,
                                      const NetWeights& weights, double epsilon = 1e-5);

/// Same estimate over an arbitrary flat parameter vector.
std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& loss_fn, std::span<const double> params,
    double epsilon = 1e-5);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps near-zero
/// components from dominating.
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-6);

}  // namespace sgswarm::num
