#include "sgswarm/swarmsim/features.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "sgswarm/error.hpp"

namespace sgswarm::sim {

EnvFeature EnvFeature::from_values(std::span<const double> values) {
  if (values.size() != 2) {
    throw InvalidInput("environment feature needs 2 values (y, L), got " +
                       std::to_string(values.size()));
  }
  if (values[0] != 0.0 && values[0] != 1.0) {
    throw InvalidInput("environment boundary flag y must be 0 (periodic) or 1 (fixed)");
  }
  if (!(values[1] > 0.0)) throw InvalidInput("environment side length L must be > 0");
  return {values[0] == 1.0 ? Boundary::kFixed : Boundary::kPeriodic, values[1]};
}

TaskFeature TaskFeature::flocking(double v_max, double v_min, double d_ref, double r_perc) {
  TaskFeature t;
  t.kind = TaskKind::kFlocking;
  t.v_max = v_max;
  t.v_min = v_min;
  t.d_ref = d_ref;
  t.r_perc = r_perc;
  t.validate();
  return t;
}

TaskFeature TaskFeature::adversarial(double v_max, double v_min, double delta_h, int n_o,
                                     double r_atta) {
  TaskFeature t;
  t.kind = TaskKind::kAdversarial;
  t.v_max = v_max;
  t.v_min = v_min;
  t.delta_h = delta_h;
  t.n_o = n_o;
  t.r_atta = r_atta;
  t.validate();
  return t;
}

TaskFeature TaskFeature::from_values(std::span<const double> values) {
  if (values.size() == 4) return flocking(values[0], values[1], values[2], values[3]);
  if (values.size() == 5) {
    const double n_o = values[3];
    if (n_o != std::floor(n_o)) throw InvalidInput("adversarial n_o must be an integer");
    return adversarial(values[0], values[1], values[2], static_cast<int>(n_o), values[4]);
  }
  throw InvalidInput("task feature needs 4 values (flocking: v_max,v_min,d_ref,r_perc) or 5 "
                     "(adversarial: v_max,v_min,delta_h,n_o,r_atta), got " +
                     std::to_string(values.size()));
}

std::vector<double> TaskFeature::values() const {
  if (kind == TaskKind::kFlocking) return {v_max, v_min, d_ref, r_perc};
  return {v_max, v_min, delta_h, static_cast<double>(n_o), r_atta};
}

std::array<double, 5> TaskFeature::padded() const {
  if (kind == TaskKind::kFlocking) return {v_max, v_min, d_ref, r_perc, 0.0};
  return {v_max, v_min, delta_h, static_cast<double>(n_o), r_atta};
}

void TaskFeature::validate() const {
  if (!(v_max > v_min) || v_min < 0.0) throw InvalidInput("task requires v_max > v_min >= 0");
  if (kind == TaskKind::kFlocking) {
    if (!(d_ref > 0.0)) throw InvalidInput("flocking task requires d_ref > 0");
    if (!(r_perc > 0.0)) throw InvalidInput("flocking task requires r_perc > 0");
  } else {
    if (!(delta_h > 0.0)) throw InvalidInput("adversarial task requires delta_h > 0");
    if (n_o < 1) throw InvalidInput("adversarial task requires n_o >= 1");
    if (!(r_atta > 0.0)) throw InvalidInput("adversarial task requires r_atta > 0");
  }
}

std::string to_string(TaskKind kind) {
  return kind == TaskKind::kFlocking ? "flocking" : "adversarial";
}

TaskKind task_kind_from_string(const std::string& name) {
  if (name == "flocking") return TaskKind::kFlocking;
  if (name == "adversarial") return TaskKind::kAdversarial;
  throw InvalidInput("unknown task kind '" + name + "'");
}

std::vector<double> parse_feature_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto first = token.find_first_not_of(" \t");
    const auto last = token.find_last_not_of(" \t");
    if (first == std::string::npos) throw InvalidInput("empty value in feature list '" + text + "'");
    token = token.substr(first, last - first + 1);
    double value = 0.0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
      throw InvalidInput("'" + token + "' is not a number in feature list '" + text + "'");
    }
    out.push_back(value);
  }
  if (out.empty()) throw InvalidInput("empty feature list");
  return out;
}

}  // namespace sgswarm::sim
