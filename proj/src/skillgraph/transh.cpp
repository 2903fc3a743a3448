#include "sgswarm/skillgraph/transh.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "sgswarm/error.hpp"

namespace sgswarm::graph {

namespace {

void check_dims(const num::Vector& h, const num::Vector& w, const num::Vector& d, const num::Vector& b) {
  if (h.size() != w.size() || d.size() != w.size() || b.size() != w.size() || w.size() == 0) {
    throw InvalidInput("transh vectors must share one non-zero length");
  }
}

}  // namespace

double transh_score_raw(const num::Vector& h, const num::Vector& w, const num::Vector& d,
                        const num::Vector& b, double lambda) {
  check_dims(h, w, d, b);
  const num::Vector delta = h - b;
  const num::Vector u = delta - w.dot(delta) * w + d;
  return std::exp(-lambda * u.norm());
}

double transh_score(const num::Vector& h, const num::Vector& w, const num::Vector& d,
                    const num::Vector& b, double lambda) {
  check_dims(h, w, d, b);
  const double n = w.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput("relation normal must be non-zero and finite");
  if (std::abs(n - 1.0) > 1e-6) {
    spdlog::warn("relation normal has norm {:.6g}; normalizing", n);
    const num::Vector unit = w / n;
    const num::Vector ph = h - unit.dot(h) * unit;
    const num::Vector pb = b - unit.dot(b) * unit;
    return std::exp(-lambda * (ph + d - pb).norm());
  }
  const num::Vector ph = h - w.dot(h) * w;
  const num::Vector pb = b - w.dot(b) * w;
  return std::exp(-lambda * (ph + d - pb).norm());
}

TranshGradient transh_gradient(const num::Vector& h, const num::Vector& w, const num::Vector& d,
                               const num::Vector& b, double lambda, double upstream) {
  check_dims(h, w, d, b);
  const num::Vector delta = h - b;
  const double c = w.dot(delta);
  const num::Vector u = delta - c * w + d;
  const double n = u.norm();
  TranshGradient g;
  g.score = std::exp(-lambda * n);
  const auto dim = w.size();
  if (n == 0.0) {
    g.dh = g.db = g.dw = g.dd = num::Vector::Zero(dim);
    return g;
  }
  const num::Vector gu = (upstream * -lambda * g.score / n) * u;
  const double wg = w.dot(gu);
  g.dd = gu;
  g.dh = gu - wg * w;
  g.db = -g.dh;
  g.dw = -(c * gu + wg * delta);
  return g;
}

}  // namespace sgswarm::graph
