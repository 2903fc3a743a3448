#pragma once

#include "sgswarm/numcore/mlp.hpp"

namespace sgswarm::graph {

/// exp(-lambda * |(h - (w.h) w) + d - (b - (w.b) w)|). A non-unit `w` is
/// normalized first (with a warning); a zero `w` or mismatched lengths throw
/// InvalidInput.
double transh_score(const num::Vector& h, const num::Vector& w, const num::Vector& d,
                    const num::Vector& b, double lambda);

/// Same formula with `w` used as given.
double transh_score_raw(const num::Vector& h, const num::Vector& w, const num::Vector& d,
                        const num::Vector& b, double lambda);

struct TranshGradient {
  double score = 0.0;
  num::Vector dh;
  num::Vector db;
  num::Vector dw;
  num::Vector dd;
};

/// Score and the gradient of `upstream * score` with respect to h, b, w, d,
/// treating w as a free vector. The gradient is zero at a zero residual.
TranshGradient transh_gradient(const num::Vector& h, const num::Vector& w, const num::Vector& d,
                               const num::Vector& b, double lambda, double upstream);

}  // namespace sgswarm::graph
