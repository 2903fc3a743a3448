#include "sgswarm/swarmsim/config_io.hpp"

#include <limits>

namespace sgswarm::sim {

namespace {

Vec2 vec2_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(path, "expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<double> numbers_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError(path + "[" + std::to_string(k) + "]", "expected a number");
    out.push_back(j[k].get<double>());
  }
  return out;
}

template <class Fn>
auto wrap_invalid(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const InvalidInput& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace

EnvFeature env_feature_from_json(const Json& j, const std::string& path) {
  const auto values = numbers_from_json(j, path);
  return wrap_invalid(path, [&] { return EnvFeature::from_values(values); });
}

TaskFeature task_feature_from_json(const Json& j, const std::string& path) {
  const auto values = numbers_from_json(j, path);
  return wrap_invalid(path, [&] { return TaskFeature::from_values(values); });
}

WorldConfig world_config_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  WorldConfig c;
  if (!j.contains("env")) throw ConfigError(path + ".env", "missing required key");
  c.env = env_feature_from_json(j.at("env"), path + ".env");
  if (!j.contains("teams") || !j.at("teams").is_array()) {
    throw ConfigError(path + ".teams", "missing required array");
  }
  const auto& teams = j.at("teams");
  for (std::size_t t = 0; t < teams.size(); ++t) {
    const std::string tp = path + ".teams[" + std::to_string(t) + "]";
    const auto& tj = teams[t];
    TeamConfig tc;
    tc.count = json_get_or<int>(tj, "count", tc.count, tp);
    if (!tj.contains("task")) throw ConfigError(tp + ".task", "missing required key");
    tc.task = task_feature_from_json(tj.at("task"), tp + ".task");
    if (tj.contains("spawn_center")) tc.spawn_center = vec2_from_json(tj["spawn_center"], tp + ".spawn_center");
    tc.spawn_half_extent = json_get_or<double>(tj, "spawn_half_extent", tc.spawn_half_extent, tp);
    tc.spawn_speed = json_get_or<double>(tj, "spawn_speed", tc.spawn_speed, tp);
    if (tj.contains("leader_paths")) {
      const auto& paths = tj.at("leader_paths");
      for (std::size_t k = 0; k < paths.size(); ++k) {
        const std::string pp = tp + ".leader_paths[" + std::to_string(k) + "]";
        LeaderPath lp;
        lp.speed = json_get_or<double>(paths[k], "speed", lp.speed, pp);
        if (!paths[k].contains("waypoints")) throw ConfigError(pp + ".waypoints", "missing required key");
        const auto& wps = paths[k].at("waypoints");
        for (std::size_t w = 0; w < wps.size(); ++w) {
          lp.waypoints.push_back(vec2_from_json(wps[w], pp + ".waypoints[" + std::to_string(w) + "]"));
        }
        tc.leader_paths.push_back(std::move(lp));
      }
    }
    c.teams.push_back(std::move(tc));
  }
  const Json empty = Json::object();
  const auto& k = j.contains("constants") ? j.at("constants") : empty;
  const std::string kp = path + ".constants";
  c.robot_radius = json_get_or(k, "robot_radius", c.robot_radius, kp);
  c.mass = json_get_or(k, "mass", c.mass, kp);
  c.hp_max = json_get_or(k, "hp_max", c.hp_max, kp);
  c.regen_factor = json_get_or(k, "regen_factor", c.regen_factor, kp);
  c.k_I = json_get_or(k, "k_I", c.k_I, kp);
  c.k_II = json_get_or(k, "k_II", c.k_II, kp);
  c.k_surv = json_get_or(k, "k_surv", c.k_surv, kp);
  c.k_situ = json_get_or(k, "k_situ", c.k_situ, kp);
  c.k_attr = json_get_or(k, "k_attr", c.k_attr, kp);
  c.k_repl = json_get_or(k, "k_repl", c.k_repl, kp);
  c.k_alig = json_get_or(k, "k_alig", c.k_alig, kp);
  c.n_h = json_get_or(k, "n_h", c.n_h, kp);
  c.dt = json_get_or(k, "dt", c.dt, kp);
  c.max_force = json_get_or(k, "max_force", c.max_force, kp);
  c.spring_constant = json_get_or(k, "spring_constant", c.spring_constant, kp);
  c.adversarial_perception = json_get_or(k, "adversarial_perception", c.adversarial_perception, kp);
  c.leader_kp = json_get_or(k, "leader_kp", c.leader_kp, kp);
  c.leader_kv = json_get_or(k, "leader_kv", c.leader_kv, kp);
  c.seed = json_get_or<std::uint64_t>(j, "seed", c.seed, path);
  wrap_invalid(path, [&] {
    c.validate();
    return 0;
  });
  return c;
}

Json to_json(const WorldConfig& c) {
  Json teams = Json::array();
  for (const auto& t : c.teams) {
    Json paths = Json::array();
    for (const auto& lp : t.leader_paths) {
      Json wps = Json::array();
      for (const auto& w : lp.waypoints) wps.push_back({w.x, w.y});
      paths.push_back({{"waypoints", wps}, {"speed", lp.speed}});
    }
    teams.push_back({{"count", t.count},
                     {"task", t.task.values()},
                     {"spawn_center", {t.spawn_center.x, t.spawn_center.y}},
                     {"spawn_half_extent", t.spawn_half_extent},
                     {"spawn_speed", t.spawn_speed},
                     {"leader_paths", paths}});
  }
  const auto env = c.env.values();
  return {{"env", {env[0], env[1]}},
          {"teams", teams},
          {"constants",
           {{"robot_radius", c.robot_radius},
            {"mass", c.mass},
            {"hp_max", c.hp_max},
            {"regen_factor", c.regen_factor},
            {"k_I", c.k_I},
            {"k_II", c.k_II},
            {"k_surv", c.k_surv},
            {"k_situ", c.k_situ},
            {"k_attr", c.k_attr},
            {"k_repl", c.k_repl},
            {"k_alig", c.k_alig},
            {"n_h", c.n_h},
            {"dt", c.dt},
            {"max_force", c.max_force},
            {"spring_constant", c.spring_constant},
            {"adversarial_perception", c.adversarial_perception},
            {"leader_kp", c.leader_kp},
            {"leader_kv", c.leader_kv}}},
          {"seed", c.seed}};
}

}  // namespace sgswarm::sim
