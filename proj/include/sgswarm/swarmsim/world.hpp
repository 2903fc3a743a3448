#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sgswarm/swarmsim/features.hpp"
#include "sgswarm/swarmsim/vec2.hpp"

namespace sgswarm::sim {

enum class Team { kGreen = 0, kRed = 1 };

constexpr Team opponent(Team t) { return t == Team::kGreen ? Team::kRed : Team::kGreen; }
std::string to_string(Team team);
Team team_from_string(const std::string& name);

struct AgentState {
  int id = 0;
  Team team = Team::kGreen;
  Vec2 p;
  Vec2 v;
  double hp = 80.0;
  bool alive = true;
  bool is_leader = false;
};

/// Piecewise-linear path traversed at constant speed; the leader stops at the
/// last waypoint.
struct LeaderPath {
  std::vector<Vec2> waypoints;
  double speed = 0.3;
};

struct TeamConfig {
  int count = 10;
  TaskFeature task;
  /// The first `leader_paths.size()` robots of the team are leaders.
  std::vector<LeaderPath> leader_paths;
  Vec2 spawn_center{3.0, 3.0};
  double spawn_half_extent = 1.0;  // robots spawn uniformly in a square
  double spawn_speed = 0.2;        // initial speed, heading uniform at random
};

struct WorldConfig {
  EnvFeature env;
  std::vector<TeamConfig> teams;  // index 0 green, optional index 1 red

  double robot_radius = 0.1;    // m
  double mass = 1.0;            // kg
  double hp_max = 80.0;
  double regen_factor = 0.1;    // un-attacked robots regain regen_factor * delta_h
  double k_I = 0.4;
  double k_II = 0.4;
  double k_surv = 5.0;
  double k_situ = 1.0;
  double k_attr = 1.0;
  double k_repl = 15.0;
  double k_alig = 2.0;
  int n_h = 6;
  double dt = 0.1;              // s
  double max_force = 2.0;       // N, force at |action| = 1
  double spring_constant = 25.0;  // N/m
  double adversarial_perception = 3.0;  // m, perception radius when the task has none
  double leader_kp = 1.0;
  double leader_kv = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
  int team_count() const { return static_cast<int>(teams.size()); }
};

struct Neighbors {
  std::vector<int> teammates;
  std::vector<int> enemies;
};

struct KillEvent {
  int victim = -1;
  std::vector<int> attackers;
};

struct StepEvents {
  std::vector<KillEvent> kills;
  std::vector<char> in_attack_position;  // per agent id
  std::vector<double> hp_loss;           // per agent id, this step
};

struct StepResult {
  std::vector<double> rewards;  // per agent id; 0 for robots dead before the step
  StepEvents events;
};

/// Observation length for `n_h` perceived neighbors: own state plus n_h slots.
constexpr int observation_size(int n_h) { return 4 + 4 * n_h; }

/// True iff the attacker is behind the target, heading towards it, and within
/// `r_atta`. `offset` is p_target - p_attacker. Either speed below 1e-9, or a
/// zero offset, makes the angles undefined and the predicate false.
bool attack_predicate(Vec2 offset, Vec2 v_attacker, Vec2 v_target, double r_atta, double k_I = 0.4,
                      double k_II = 0.4);
bool attack_predicate(const AgentState& attacker, const AgentState& target, double r_atta,
                      double k_I = 0.4, double k_II = 0.4);

/// Relative state of one neighbour as seen by the focal robot.
struct RelativeState {
  Vec2 dp;  // p_j - p_i
  Vec2 v;   // v_j (absolute)
};

/// r_attr + r_repl + r_alig. Attraction and repulsion are averaged over the
/// neighbours; no neighbours gives 0.
double flocking_reward(Vec2 own_velocity, std::span<const RelativeState> neighbors, double d_ref,
                       double k_attr, double k_repl, double k_alig);

/// r_surv + r_situ for one robot given this step's events.
double adversarial_reward(int agent_id, const StepEvents& events, double k_surv, double k_situ);

/// f = k_p (p_c - p) + k_v (v_c - v).
Vec2 pursuit_force(Vec2 p, Vec2 v, Vec2 p_target, Vec2 v_target, double k_p, double k_v);

/// Clamps each component of `force / max_force` to [-1, 1].
Vec2 force_to_action(Vec2 force, double max_force);

/// Point and velocity a path-following leader should have at time t.
struct PathSample {
  Vec2 position;
  Vec2 velocity;
};
PathSample sample_path(const LeaderPath& path, double t);

class World {
 public:
  explicit World(WorldConfig config);
  /// World with explicitly placed robots (tests, scenario restarts). Agent ids
  /// must be 0..n-1 in order.
  World(WorldConfig config, std::vector<AgentState> agents);

  const WorldConfig& config() const { return config_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const AgentState& agent(int id) const;
  long tick() const { return tick_; }
  double time() const { return static_cast<double>(tick_) * config_.dt; }

  const TaskFeature& team_task(Team team) const;
  void set_team_task(Team team, const TaskFeature& task);
  bool has_team(Team team) const { return static_cast<int>(team) < config_.team_count(); }
  int living_count(Team team) const;
  std::vector<int> team_members(Team team) const;
  /// Centroid of the living robots of `team` (plain average of positions).
  Vec2 team_centroid(Team team) const;
  double perception_radius(Team team) const;
  const LeaderPath* leader_path(int id) const;

  /// Minimum-image displacement under a periodic boundary, plain difference otherwise.
  Vec2 displacement(Vec2 from, Vec2 to) const;

  /// Living robots within the perception radius, nearest first (ties by id).
  /// Flocking: up to n_h teammates. Adversarial: up to n_h/2 per side.
  Neighbors perceive(int id) const;
  /// [x_i, relative teammate states..., relative enemy states...], zero padded.
  std::vector<double> observe(int id) const;
  double flocking_reward_of(int id) const;

  /// Advances one tick. `actions` holds one entry per robot (dead robots'
  /// entries are ignored); components are clamped to [-1, 1].
  StepResult step(std::span<const Vec2> actions);

  /// Applies attack damage, regeneration, and deaths for the current state.
  StepEvents resolve_combat();

  /// Scripted controller: pursue the nearest living enemy. Zero action when
  /// no enemy is alive.
  Vec2 scripted_pursuit(int id, double k_p, double k_v) const;
  /// Path-following force for a leader, as an action.
  Vec2 leader_policy(int id) const;

  /// Overrides used by tests and the orchestrator.
  void set_state(int id, Vec2 p, Vec2 v);
  void set_hp(int id, double hp);
  void remove_team(Team team);

 private:
  void spawn();
  void wrap_or_reflect(AgentState& a) const;
  bool combat_enabled(Team attacker_team) const;

  WorldConfig config_;
  std::vector<AgentState> agents_;
  std::vector<int> leader_index_;  // per agent: index into its team's leader paths or -1
  std::vector<TaskFeature> tasks_;
  long tick_ = 0;
};

}  // namespace sgswarm::sim
