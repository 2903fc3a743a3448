#include "sgswarm/swarmsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sgswarm/error.hpp"

namespace sgswarm::sim {

namespace {

constexpr double kMinSpeed = 1e-9;

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

struct Candidate {
  double distance;
  int id;
  bool operator<(const Candidate& o) const {
    return distance < o.distance || (distance == o.distance && id < o.id);
  }
};

}  // namespace

std::string to_string(Team team) { return team == Team::kGreen ? "green" : "red"; }

Team team_from_string(const std::string& name) {
  if (name == "green") return Team::kGreen;
  if (name == "red") return Team::kRed;
  throw InvalidInput("unknown team '" + name + "'");
}

void WorldConfig::validate() const {
  if (teams.empty() || teams.size() > 2) throw InvalidInput("world needs one or two teams");
  if (!(env.side > 0.0)) throw InvalidInput("environment side length must be > 0");
  if (!(dt > 0.0)) throw InvalidInput("dt must be > 0");
  if (!(mass > 0.0)) throw InvalidInput("mass must be > 0");
  if (!(hp_max > 0.0)) throw InvalidInput("hp_max must be > 0");
  if (n_h < 2 || n_h % 2 != 0) throw InvalidInput("n_h must be an even number >= 2");
  if (!(max_force > 0.0)) throw InvalidInput("max_force must be > 0");
  if (robot_radius < 0.0 || spring_constant < 0.0) {
    throw InvalidInput("robot_radius and spring_constant must be >= 0");
  }
  for (const auto& t : teams) {
    if (t.count < 0) throw InvalidInput("team count must be >= 0");
    if (static_cast<int>(t.leader_paths.size()) > t.count) {
      throw InvalidInput("more leader paths than robots in a team");
    }
    for (const auto& path : t.leader_paths) {
      if (path.waypoints.empty()) throw InvalidInput("leader path needs at least one waypoint");
    }
    t.task.validate();
  }
}

bool attack_predicate(Vec2 offset, Vec2 v_attacker, Vec2 v_target, double r_atta, double k_I,
                      double k_II) {
  const double dist = offset.norm();
  const double sa = v_attacker.norm();
  const double st = v_target.norm();
  if (dist <= 0.0 || sa < kMinSpeed || st < kMinSpeed) return false;
  if (!(dist < r_atta)) return false;
  const double cos_I = std::clamp(dot(offset, v_attacker) / (dist * sa), -1.0, 1.0);
  const double cos_II = std::clamp(dot(offset, v_target) / (dist * st), -1.0, 1.0);
  return std::acos(cos_I) <= k_I * std::numbers::pi && std::acos(cos_II) <= k_II * std::numbers::pi;
}

bool attack_predicate(const AgentState& attacker, const AgentState& target, double r_atta,
                      double k_I, double k_II) {
  return attack_predicate(target.p - attacker.p, attacker.v, target.v, r_atta, k_I, k_II);
}

double flocking_reward(Vec2 own_velocity, std::span<const RelativeState> neighbors, double d_ref,
                       double k_attr, double k_repl, double k_alig) {
  if (neighbors.empty()) return 0.0;
  double attraction = 0.0;
  double repulsion = 0.0;
  Vec2 heading_gap;
  const Vec2 own_heading = unit_or_zero(own_velocity);
  for (const auto& n : neighbors) {
    const double d = n.dp.norm();
    if (d > d_ref) attraction += d - d_ref;
    if (d < d_ref) repulsion += d_ref - d;
    heading_gap += unit_or_zero(n.v) - own_heading;
  }
  const double count = static_cast<double>(neighbors.size());
  return -k_attr * attraction / count - k_repl * repulsion / count -
         k_alig * (heading_gap / count).norm();
}

double adversarial_reward(int agent_id, const StepEvents& events, double k_surv, double k_situ) {
  double reward = 0.0;
  for (const auto& kill : events.kills) {
    if (kill.victim == agent_id) reward -= k_surv;
    for (int a : kill.attackers) {
      if (a == agent_id) reward += k_surv;
    }
  }
  if (agent_id >= 0 && static_cast<std::size_t>(agent_id) < events.in_attack_position.size() &&
      events.in_attack_position[agent_id]) {
    reward += k_situ;
  }
  return reward;
}

Vec2 pursuit_force(Vec2 p, Vec2 v, Vec2 p_target, Vec2 v_target, double k_p, double k_v) {
  return k_p * (p_target - p) + k_v * (v_target - v);
}

Vec2 force_to_action(Vec2 force, double max_force) {
  return {clamp_unit(force.x / max_force), clamp_unit(force.y / max_force)};
}

PathSample sample_path(const LeaderPath& path, double t) {
  const auto& w = path.waypoints;
  if (w.size() == 1) return {w.front(), {}};
  double remaining = std::max(0.0, path.speed * t);
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    const Vec2 seg = w[k + 1] - w[k];
    const double len = seg.norm();
    if (len <= 0.0) continue;
    if (remaining <= len) return {w[k] + seg * (remaining / len), seg * (path.speed / len)};
    remaining -= len;
  }
  return {w.back(), {}};
}

World::World(WorldConfig config) : config_(std::move(config)) {
  config_.validate();
  for (const auto& t : config_.teams) tasks_.push_back(t.task);
  spawn();
}

World::World(WorldConfig config, std::vector<AgentState> agents)
    : config_(std::move(config)), agents_(std::move(agents)) {
  for (auto& t : config_.teams) t.count = 0;
  for (const auto& a : agents_) {
    const auto team = static_cast<std::size_t>(a.team);
    if (team < config_.teams.size()) ++config_.teams[team].count;
  }
  config_.validate();
  for (const auto& t : config_.teams) tasks_.push_back(t.task);
  std::vector<int> leaders_seen(config_.teams.size(), 0);
  leader_index_.assign(agents_.size(), -1);
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    auto& a = agents_[i];
    if (a.id != static_cast<int>(i)) throw InvalidInput("agent ids must be 0..n-1 in order");
    const auto team = static_cast<std::size_t>(a.team);
    if (team >= config_.teams.size()) throw InvalidInput("agent belongs to an unconfigured team");
    a.hp = std::clamp(a.hp, 0.0, config_.hp_max);
    a.alive = a.hp > 0.0;
    if (a.is_leader) {
      if (leaders_seen[team] >= static_cast<int>(config_.teams[team].leader_paths.size())) {
        throw InvalidInput("leader agent without a configured path");
      }
      leader_index_[i] = leaders_seen[team]++;
    }
  }
}

void World::spawn() {
  std::mt19937_64 rng(config_.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double L = config_.env.side;
  const double R = config_.robot_radius;
  const double min_sep = 2.5 * R;
  int next_id = 0;
  for (std::size_t team = 0; team < config_.teams.size(); ++team) {
    const auto& tc = config_.teams[team];
    for (int k = 0; k < tc.count; ++k) {
      AgentState a;
      a.id = next_id++;
      a.team = static_cast<Team>(team);
      a.hp = config_.hp_max;
      const bool leader = k < static_cast<int>(tc.leader_paths.size());
      a.is_leader = leader;
      if (leader) {
        const auto s = sample_path(tc.leader_paths[k], 0.0);
        a.p = s.position;
        a.v = s.velocity;
      } else {
        for (int attempt = 0; attempt < 1000; ++attempt) {
          a.p = {tc.spawn_center.x + (2.0 * unit(rng) - 1.0) * tc.spawn_half_extent,
                 tc.spawn_center.y + (2.0 * unit(rng) - 1.0) * tc.spawn_half_extent};
          a.p.x = std::clamp(a.p.x, R, L - R);
          a.p.y = std::clamp(a.p.y, R, L - R);
          const bool clear = std::none_of(agents_.begin(), agents_.end(), [&](const AgentState& o) {
            return displacement(o.p, a.p).norm() < min_sep;
          });
          if (clear) break;
        }
        const double heading = 2.0 * std::numbers::pi * unit(rng);
        const double speed = std::clamp(tc.spawn_speed, tc.task.v_min, tc.task.v_max);
        a.v = {speed * std::cos(heading), speed * std::sin(heading)};
      }
      agents_.push_back(a);
      leader_index_.push_back(leader ? k : -1);
    }
  }
}

const AgentState& World::agent(int id) const {
  if (id < 0 || id >= static_cast<int>(agents_.size())) {
    throw InvalidInput("no agent with id " + std::to_string(id));
  }
  return agents_[id];
}

const TaskFeature& World::team_task(Team team) const {
  if (!has_team(team)) throw InvalidInput("team " + to_string(team) + " is not configured");
  return tasks_[static_cast<std::size_t>(team)];
}

void World::set_team_task(Team team, const TaskFeature& task) {
  if (!has_team(team)) throw InvalidInput("team " + to_string(team) + " is not configured");
  task.validate();
  tasks_[static_cast<std::size_t>(team)] = task;
}

int World::living_count(Team team) const {
  return static_cast<int>(std::count_if(agents_.begin(), agents_.end(), [&](const AgentState& a) {
    return a.alive && a.team == team;
  }));
}

std::vector<int> World::team_members(Team team) const {
  std::vector<int> ids;
  for (const auto& a : agents_) {
    if (a.team == team) ids.push_back(a.id);
  }
  return ids;
}

Vec2 World::team_centroid(Team team) const {
  Vec2 sum;
  int n = 0;
  for (const auto& a : agents_) {
    if (a.alive && a.team == team) {
      sum += a.p;
      ++n;
    }
  }
  return n > 0 ? sum / static_cast<double>(n) : sum;
}

double World::perception_radius(Team team) const {
  const auto& task = team_task(team);
  return task.kind == TaskKind::kFlocking ? task.r_perc : config_.adversarial_perception;
}

const LeaderPath* World::leader_path(int id) const {
  const auto& a = agent(id);
  const int k = leader_index_[id];
  if (!a.is_leader || k < 0) return nullptr;
  return &config_.teams[static_cast<std::size_t>(a.team)].leader_paths[k];
}

Vec2 World::displacement(Vec2 from, Vec2 to) const {
  Vec2 d = to - from;
  if (config_.env.boundary == Boundary::kPeriodic) {
    const double L = config_.env.side;
    d.x -= L * std::round(d.x / L);
    d.y -= L * std::round(d.y / L);
  }
  return d;
}

Neighbors World::perceive(int id) const {
  const auto& self = agent(id);
  if (!self.alive) throw InvalidInput("perceive: agent " + std::to_string(id) + " is dead");
  const double radius = perception_radius(self.team);
  const bool flocking = team_task(self.team).kind == TaskKind::kFlocking;
  std::vector<Candidate> mates;
  std::vector<Candidate> foes;
  for (const auto& o : agents_) {
    if (!o.alive || o.id == id) continue;
    const double d = displacement(self.p, o.p).norm();
    if (d > radius) continue;
    (o.team == self.team ? mates : foes).push_back({d, o.id});
  }
  std::sort(mates.begin(), mates.end());
  std::sort(foes.begin(), foes.end());
  const std::size_t mate_cap = flocking ? config_.n_h : config_.n_h / 2;
  const std::size_t foe_cap = flocking ? 0 : config_.n_h / 2;
  Neighbors out;
  for (std::size_t k = 0; k < std::min(mate_cap, mates.size()); ++k) out.teammates.push_back(mates[k].id);
  for (std::size_t k = 0; k < std::min(foe_cap, foes.size()); ++k) out.enemies.push_back(foes[k].id);
  return out;
}

std::vector<double> World::observe(int id) const {
  const auto& self = agent(id);
  const auto nb = perceive(id);
  const bool flocking = team_task(self.team).kind == TaskKind::kFlocking;
  std::vector<double> obs(observation_size(config_.n_h), 0.0);
  obs[0] = self.p.x;
  obs[1] = self.p.y;
  obs[2] = self.v.x;
  obs[3] = self.v.y;
  auto fill = [&](const std::vector<int>& ids, int first_slot) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const auto& o = agents_[ids[k]];
      const Vec2 dp = displacement(self.p, o.p);
      const Vec2 dv = o.v - self.v;
      const std::size_t base = 4 + 4 * (first_slot + k);
      obs[base] = dp.x;
      obs[base + 1] = dp.y;
      obs[base + 2] = dv.x;
      obs[base + 3] = dv.y;
    }
  };
  fill(nb.teammates, 0);
  if (!flocking) fill(nb.enemies, config_.n_h / 2);
  return obs;
}

double World::flocking_reward_of(int id) const {
  const auto& self = agent(id);
  const auto& task = team_task(self.team);
  const auto nb = perceive(id);
  std::vector<RelativeState> rel;
  rel.reserve(nb.teammates.size());
  for (int j : nb.teammates) rel.push_back({displacement(self.p, agents_[j].p), agents_[j].v});
  return flocking_reward(self.v, rel, task.d_ref, config_.k_attr, config_.k_repl, config_.k_alig);
}

bool World::combat_enabled(Team attacker_team) const {
  return config_.team_count() == 2 && team_task(attacker_team).kind == TaskKind::kAdversarial;
}

void World::wrap_or_reflect(AgentState& a) const {
  const double L = config_.env.side;
  if (config_.env.boundary == Boundary::kPeriodic) {
    a.p.x -= L * std::floor(a.p.x / L);
    a.p.y -= L * std::floor(a.p.y / L);
    // floor can round x/L up to exactly 1 for tiny negative x
    if (a.p.x >= L) a.p.x = 0.0;
    if (a.p.y >= L) a.p.y = 0.0;
    return;
  }
  auto reflect = [L](double& p, double& v) {
    if (p < 0.0) {
      p = -p;
      v = std::abs(v);
    } else if (p > L) {
      p = 2.0 * L - p;
      v = -std::abs(v);
    }
    p = std::clamp(p, 0.0, L);
  };
  reflect(a.p.x, a.v.x);
  reflect(a.p.y, a.v.y);
}

StepResult World::step(std::span<const Vec2> actions) {
  const std::size_t n = agents_.size();
  if (actions.size() != n) {
    throw InvalidInput("step: got " + std::to_string(actions.size()) + " actions for " +
                       std::to_string(n) + " agents");
  }
  const double R = config_.robot_radius;
  const double L = config_.env.side;
  const double k = config_.spring_constant;
  std::vector<Vec2> force(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!agents_[i].alive) continue;
    force[i] = Vec2{clamp_unit(actions[i].x), clamp_unit(actions[i].y)} * config_.max_force;
  }
  // Hooke contact between overlapping disks.
  for (std::size_t i = 0; i < n; ++i) {
    if (!agents_[i].alive) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!agents_[j].alive) continue;
      const Vec2 d = displacement(agents_[j].p, agents_[i].p);  // j -> i
      const double dist = d.norm();
      const double overlap = 2.0 * R - dist;
      if (overlap <= 0.0) continue;
      const Vec2 dir = dist > 1e-12 ? d / dist : Vec2{-1.0, 0.0};
      force[i] += dir * (k * overlap);
      force[j] -= dir * (k * overlap);
    }
  }
  if (config_.env.boundary == Boundary::kFixed) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!agents_[i].alive) continue;
      const Vec2 p = agents_[i].p;
      if (p.x < R) force[i].x += k * (R - p.x);
      if (p.x > L - R) force[i].x -= k * (p.x - (L - R));
      if (p.y < R) force[i].y += k * (R - p.y);
      if (p.y > L - R) force[i].y -= k * (p.y - (L - R));
    }
  }
  // Semi-implicit Euler: velocity first, then position with the new velocity.
  for (std::size_t i = 0; i < n; ++i) {
    auto& a = agents_[i];
    if (!a.alive) continue;
    const auto& task = team_task(a.team);
    a.v += force[i] * (config_.dt / config_.mass);
    const double speed = a.v.norm();
    if (speed > task.v_max) {
      a.v *= task.v_max / speed;
    } else if (speed < task.v_min) {
      a.v = speed > 1e-12 ? a.v * (task.v_min / speed) : Vec2{task.v_min, 0.0};
    }
    a.p += a.v * config_.dt;
    wrap_or_reflect(a);
  }
  ++tick_;

  std::vector<char> alive_before(n);
  for (std::size_t i = 0; i < n; ++i) alive_before[i] = agents_[i].alive;
  StepResult result;
  result.events = resolve_combat();
  result.rewards.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!alive_before[i]) continue;
    const auto& a = agents_[i];
    if (team_task(a.team).kind == TaskKind::kAdversarial) {
      result.rewards[i] =
          adversarial_reward(a.id, result.events, config_.k_surv, config_.k_situ);
    } else if (a.alive) {
      result.rewards[i] = flocking_reward_of(a.id);
    }
  }
  return result;
}

StepEvents World::resolve_combat() {
  const std::size_t n = agents_.size();
  StepEvents events;
  events.in_attack_position.assign(n, 0);
  events.hp_loss.assign(n, 0.0);
  if (config_.team_count() < 2) return events;
  if (!combat_enabled(Team::kGreen) && !combat_enabled(Team::kRed)) return events;

  std::vector<double> new_hp(n);
  std::vector<std::vector<int>> hitters(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& target = agents_[t];
    new_hp[t] = target.hp;
    if (!target.alive) continue;
    const Team attacker_team = opponent(target.team);
    if (!combat_enabled(attacker_team)) {
      continue;
    }
    const auto& attacker_task = team_task(attacker_team);
    const auto& target_task = team_task(target.team);
    const auto& damage_task =
        target_task.kind == TaskKind::kAdversarial ? target_task : attacker_task;
    std::vector<Candidate> valid;
    for (const auto& a : agents_) {
      if (!a.alive || a.team != attacker_team) continue;
      const Vec2 offset = displacement(a.p, target.p);
      if (attack_predicate(offset, a.v, target.v, attacker_task.r_atta, config_.k_I,
                           config_.k_II)) {
        valid.push_back({offset.norm(), a.id});
        events.in_attack_position[a.id] = 1;
      }
    }
    std::sort(valid.begin(), valid.end());
    const std::size_t cap = std::min<std::size_t>(valid.size(), damage_task.n_o);
    for (std::size_t k = 0; k < cap; ++k) hitters[t].push_back(valid[k].id);
    if (cap > 0) {
      new_hp[t] = std::max(0.0, target.hp - damage_task.delta_h * static_cast<double>(cap));
    } else if (target_task.kind == TaskKind::kAdversarial) {
      new_hp[t] = std::min(config_.hp_max,
                           target.hp + config_.regen_factor * target_task.delta_h);
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    auto& a = agents_[t];
    if (!a.alive) continue;
    events.hp_loss[t] = std::max(0.0, a.hp - new_hp[t]);
    a.hp = new_hp[t];
    if (a.hp <= 0.0) {
      a.alive = false;
      events.kills.push_back({a.id, hitters[t]});
    }
  }
  return events;
}

Vec2 World::scripted_pursuit(int id, double k_p, double k_v) const {
  const auto& self = agent(id);
  const AgentState* best = nullptr;
  double best_d = 0.0;
  for (const auto& o : agents_) {
    if (!o.alive || o.team == self.team) continue;
    const double d = displacement(self.p, o.p).norm();
    if (best == nullptr || d < best_d) {
      best = &o;
      best_d = d;
    }
  }
  if (best == nullptr) return {};
  const Vec2 target = self.p + displacement(self.p, best->p);
  return force_to_action(pursuit_force(self.p, self.v, target, best->v, k_p, k_v),
                         config_.max_force);
}

Vec2 World::leader_policy(int id) const {
  const auto* path = leader_path(id);
  if (path == nullptr) throw InvalidInput("agent " + std::to_string(id) + " is not a leader");
  const auto& self = agents_[id];
  const auto want = sample_path(*path, time());
  const Vec2 force = config_.leader_kp * displacement(self.p, want.position) +
                     config_.leader_kv * (want.velocity - self.v);
  return force_to_action(force, config_.max_force);
}

void World::set_state(int id, Vec2 p, Vec2 v) {
  agent(id);
  agents_[id].p = p;
  agents_[id].v = v;
}

void World::set_hp(int id, double hp) {
  agent(id);
  agents_[id].hp = std::clamp(hp, 0.0, config_.hp_max);
  agents_[id].alive = agents_[id].hp > 0.0;
}

void World::remove_team(Team team) {
  for (auto& a : agents_) {
    if (a.team == team) {
      a.alive = false;
      a.hp = 0.0;
    }
  }
}

}  // namespace sgswarm::sim
