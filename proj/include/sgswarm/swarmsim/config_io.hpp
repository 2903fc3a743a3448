#pragma once

#include "sgswarm/json_util.hpp"
#include "sgswarm/swarmsim/world.hpp"

namespace sgswarm::sim {

// World configuration schema (all keys optional unless noted):
//   env:   [y, L]                          required
//   teams: [ {count, task: [..4 or 5..], spawn_center: [x,y], spawn_half_extent,
//             spawn_speed, leader_paths: [ {waypoints: [[x,y],...], speed} ]} ]
//   constants: robot_radius, mass, hp_max, regen_factor, k_I, k_II, k_surv,
//              k_situ, k_attr, k_repl, k_alig, n_h, dt, max_force,
//              spring_constant, adversarial_perception, leader_kp, leader_kv
//   seed
WorldConfig world_config_from_json(const Json& j, const std::string& path = "world");
Json to_json(const WorldConfig& config);

EnvFeature env_feature_from_json(const Json& j, const std::string& path);
TaskFeature task_feature_from_json(const Json& j, const std::string& path);

}  // namespace sgswarm::sim
