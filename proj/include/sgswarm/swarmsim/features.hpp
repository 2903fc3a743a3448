#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace sgswarm::sim {

enum class Boundary { kPeriodic = 0, kFixed = 1 };

/// Environment feature e = (y, L): y = 0 periodic, 1 fixed; L side length in m.
struct EnvFeature {
  Boundary boundary = Boundary::kFixed;
  double side = 6.0;

  std::array<double, 2> values() const {
    return {boundary == Boundary::kFixed ? 1.0 : 0.0, side};
  }
  /// Throws InvalidInput unless exactly two values with y in {0,1} and L > 0.
  static EnvFeature from_values(std::span<const double> values);
  bool operator==(const EnvFeature&) const = default;
};

enum class TaskKind { kFlocking, kAdversarial };

/// Task feature. Flocking: (v_max, v_min, d_ref, r_perc).
/// Adversarial: (v_max, v_min, delta_h, n_o, r_atta).
struct TaskFeature {
  TaskKind kind = TaskKind::kFlocking;
  double v_max = 1.0;
  double v_min = 0.0;
  double d_ref = 0.4;       // flocking
  double r_perc = 3.0;      // flocking
  double delta_h = 1.0;     // adversarial
  int n_o = 3;              // adversarial
  double r_atta = 0.3;      // adversarial

  static TaskFeature flocking(double v_max, double v_min, double d_ref, double r_perc);
  static TaskFeature adversarial(double v_max, double v_min, double delta_h, int n_o,
                                 double r_atta);
  /// Kind is inferred from arity: 4 values flocking, 5 adversarial.
  static TaskFeature from_values(std::span<const double> values);

  /// Values in feature order (4 or 5 entries).
  std::vector<double> values() const;
  /// Five slots; flocking carries 0 in the last one.
  std::array<double, 5> padded() const;
  void validate() const;
  bool operator==(const TaskFeature&) const = default;
};

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);

/// Parses "1,0,0.4,3" into numbers. Throws InvalidInput naming the bad token.
std::vector<double> parse_feature_list(const std::string& text);

}  // namespace sgswarm::sim
