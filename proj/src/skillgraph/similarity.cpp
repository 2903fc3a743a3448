#include "sgswarm/skillgraph/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sgswarm/error.hpp"

namespace sgswarm::graph {

EntityFeature EntityFeature::environment(const sim::EnvFeature& env) {
  const auto v = env.values();
  return {EntityKind::kEnvironment, {v.begin(), v.end()}, sim::TaskKind::kFlocking};
}

EntityFeature EntityFeature::task(const sim::TaskFeature& task) {
  task.validate();
  const auto v = task.padded();
  return {EntityKind::kTask, {v.begin(), v.end()}, task.kind};
}

std::string EntityFeature::label() const {
  std::ostringstream s;
  s << (kind == EntityKind::kEnvironment ? "env(" : "task(");
  for (std::size_t k = 0; k < values.size(); ++k) s << (k ? "," : "") << values[k];
  s << ')';
  return s.str();
}

DeltaWeights DeltaWeights::named(const std::string& profile) {
  DeltaWeights w;
  w.profile = profile;
  if (profile == "aligned") return w;
  if (profile == "padded-slot") {
    w.task_flocking = w.task_adversarial;
    return w;
  }
  if (profile == "slot-shifted") {
    // r_perc keeps the slot-4 weight; the slot-5 weight moves onto d_ref
    w.task_flocking = {0.0, 0.0, 1.0, 3.0, 0.0};
    return w;
  }
  throw InvalidInput("unknown delta profile '" + profile + "' (expected aligned, padded-slot or slot-shifted)");
}

void DeltaWeights::validate() const {
  auto check = [](const auto& ks, const char* what) {
    double sum = 0.0;
    for (double k : ks) {
      if (!(k >= 0.0) || !std::isfinite(k)) throw InvalidInput(std::string(what) + " weights must be >= 0");
      sum += k;
    }
    if (!(sum > 0.0)) throw InvalidInput(std::string(what) + " weights must not all be zero");
  };
  check(task_adversarial, "adversarial task");
  check(task_flocking, "flocking task");
  check(env, "environment");
}

Json to_json(const DeltaWeights& w) {
  return Json{{"profile", w.profile},
              {"task_adversarial", w.task_adversarial},
              {"task_flocking", w.task_flocking},
              {"env", w.env}};
}

DeltaWeights delta_weights_from_json(const Json& j, const std::string& path) {
  try {
    if (j.is_string()) return DeltaWeights::named(j.get<std::string>());
    if (!j.is_object()) throw ConfigError(path, "expected a profile name or an object");
    const auto profile = json_get_or<std::string>(j, "profile", "custom", path);
    DeltaWeights w = DeltaWeights::named(profile == "custom" ? "aligned" : profile);
    w.profile = profile;
    w.task_adversarial = json_get_or(j, "task_adversarial", w.task_adversarial, path);
    w.task_flocking = json_get_or(j, "task_flocking", w.task_flocking, path);
    w.env = json_get_or(j, "env", w.env, path);
    w.validate();
    return w;
  } catch (const InvalidInput& e) {
    throw ConfigError(path, e.what());
  }
}

double delta(const EntityFeature& a, const EntityFeature& b, const DeltaWeights& weights) {
  if (a.kind != b.kind || a.values.size() != b.values.size()) {
    throw InvalidInput("similarity needs two entities of the same kind");
  }
  std::span<const double> k;
  if (a.kind == EntityKind::kEnvironment) {
    k = weights.env;
  } else {
    if (a.task_kind != b.task_kind) throw InvalidInput("similarity across task kinds is undefined");
    k = a.task_kind == sim::TaskKind::kFlocking ? std::span<const double>(weights.task_flocking)
                                                 : std::span<const double>(weights.task_adversarial);
  }
  if (k.size() != a.values.size()) throw InvalidInput("similarity weights do not match the feature length");
  double num = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) num += k[j] * std::abs(a.values[j] - b.values[j]);
  const double den = std::accumulate(k.begin(), k.end(), 0.0);
  return std::min(num / den, 1.0);
}

}  // namespace sgswarm::graph
