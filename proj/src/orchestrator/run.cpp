#include "sgswarm/orchestrator/run.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "sgswarm/error.hpp"

namespace sgswarm::orch {

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr int kTopRows = 5;

using SkillPtr = std::shared_ptr<const marl::SkillRecord>;

struct TeamPolicy {
  bool active = false;
  bool scripted = false;
  graph::DispatchDecision dispatch;  // members aligned with `skills`
  std::vector<SkillPtr> skills;
};

class Runner {
 public:
  Runner(const ScenarioSpec& spec, const SkillRegistry& registry, const graph::GraphModel& graph,
         std::uint64_t seed, const RunOptions& options)
      : spec_(spec), registry_(registry), graph_(graph), seed_(seed), options_(options),
        world_(make_world()) {
    result_.seed = seed;
    policies_.resize(static_cast<std::size_t>(spec.team_count()));
  }

  ScenarioResult run() {
    int stage = 0;
    enter_stage(stage);
    record(stage, true);
    long steps_in_stage = 0;
    std::vector<sim::Vec2> actions(world_.agents().size());
    while (true) {
      for (const auto& a : world_.agents()) actions[a.id] = a.alive ? action_for(a, stage) : sim::Vec2{};
      world_.step(actions);
      ++steps_in_stage;
      record(stage, false);
      const bool last = stage + 1 == static_cast<int>(spec_.stages.size());
      if (!last && entry_met(spec_.stages[stage + 1].entry)) {
        close_stage(stage, "next-stage");
        ++stage;
        steps_in_stage = 0;
        enter_stage(stage);
        continue;
      }
      if (steps_in_stage >= spec_.stages[stage].max_steps) {
        if (last) {
          close_stage(stage, "completed");
        } else {
          close_stage(stage, "truncated");
          result_.truncated = true;
          result_.diagnostic = "stage " + std::to_string(stage + 1) + " (" + spec_.stages[stage].name +
                               "): " + to_string(spec_.stages[stage + 1].entry) +
                               " condition not met within " + std::to_string(spec_.stages[stage].max_steps) +
                               " steps";
          spdlog::warn("scenario seed {}: {}", seed_, result_.diagnostic);
        }
        break;
      }
    }
    record(stage, true);
    return std::move(result_);
  }

 private:
  sim::World make_world() const {
    sim::WorldConfig cfg = spec_.world;
    cfg.seed = mix(seed_, 11);
    for (std::size_t t = 0; t < cfg.teams.size(); ++t) cfg.teams[t].task = spec_.stages[0].teams[t].task;
    if (spec_.agents.empty()) return sim::World(cfg);
    return sim::World(cfg, spec_.agents);
  }

  void record(int stage, bool force) {
    if (spec_.record_every == 0) return;
    if (!force && world_.tick() % spec_.record_every != 0) return;
    if (!result_.trajectory.empty() && result_.trajectory.back().tick == world_.tick()) return;
    result_.trajectory.push_back({world_.tick(), stage, world_.agents()});
  }

  bool alive(sim::Team t) const { return world_.has_team(t) && world_.living_count(t) > 0; }

  bool entry_met(EntryCondition c) const {
    switch (c) {
      case EntryCondition::kStart: return false;
      case EntryCondition::kEncounter: return encounter();
      case EntryCondition::kTeamEliminated:
        return world_.living_count(sim::Team::kGreen) == 0 || world_.living_count(sim::Team::kRed) == 0;
    }
    return false;
  }

  bool encounter() const {
    for (const auto team : {sim::Team::kGreen, sim::Team::kRed}) {
      const auto other = sim::opponent(team);
      if (!alive(team) || !alive(other)) continue;
      const sim::Vec2 c = world_.team_centroid(other);
      const double r = world_.perception_radius(team);
      for (const auto& a : world_.agents()) {
        if (a.alive && a.team == team && world_.displacement(a.p, c).norm() <= r) return true;
      }
    }
    return false;
  }

  void close_stage(int stage, const std::string& reason) {
    auto& s = result_.stages.back();
    s.exit_tick = world_.tick();
    s.green_alive = world_.living_count(sim::Team::kGreen);
    s.red_alive = world_.has_team(sim::Team::kRed) ? world_.living_count(sim::Team::kRed) : 0;
    s.exit_reason = reason;
    (void)stage;
  }

  SkillPtr skill(const std::string& name) {
    if (auto it = cache_.find(name); it != cache_.end()) return it->second;
    if (!registry_.contains(name)) {
      throw IntegrityError("skill " + name + " is not in the registry at " + registry_.root().string());
    }
    auto rec = std::make_shared<const marl::SkillRecord>(registry_.load(name));
    cache_[name] = rec;
    return rec;
  }

  void enter_stage(int stage) {
    const auto& st = spec_.stages[stage];
    StageSummary summary;
    summary.stage = stage + 1;
    summary.name = st.name;
    summary.entry_tick = world_.tick();
    result_.stages.push_back(summary);

    for (std::size_t t = 0; t < st.teams.size(); ++t) {
      const auto team = static_cast<sim::Team>(t);
      world_.set_team_task(team, st.teams[t].task);
      if (!alive(team)) {
        world_.remove_team(team);
        policies_[t] = {};
      }
    }
    std::vector<int> decision_of(st.teams.size(), -1);
    for (std::size_t t = 0; t < st.teams.size(); ++t) {
      const auto team = static_cast<sim::Team>(t);
      if (!alive(team)) continue;
      const auto& ts = st.teams[t];
      TeamPolicy p;
      p.active = true;
      if (ts.source == PolicySource::kScripted) {
        p.scripted = true;
      } else if (ts.source == PolicySource::kFixedSkill) {
        p.dispatch = {graph::Band::kReuse, {{graph_skill_index(ts.skill), ts.skill, 1.0}}};
        p.skills = {skill(ts.skill)};
      } else {
        int d = -1;
        for (std::size_t u = 0; u < t; ++u) {
          if (decision_of[u] >= 0 && st.teams[u].source == PolicySource::kGraphQuery && st.teams[u].task == ts.task) {
            d = decision_of[u];
          }
        }
        if (d < 0) {
          d = decide(stage, ts);
        }
        decision_of[t] = d;
        auto& dec = result_.decisions[static_cast<std::size_t>(d)];
        dec.teams.push_back(team);
        p.dispatch = installed_[static_cast<std::size_t>(d)].dispatch;
        p.skills = installed_[static_cast<std::size_t>(d)].skills;
      }
      policies_[t] = std::move(p);
    }
  }

  int graph_skill_index(const std::string& name) const {
    for (int i = 0; i < graph_.skill_count(); ++i) {
      if (graph_.skills[i].name == name) return i;
    }
    return -1;
  }

  int decide(int stage, const TeamStage& ts) {
    Decision dec;
    dec.stage = stage + 1;
    dec.tick = world_.tick();
    dec.env = spec_.env();
    dec.task = ts.task;
    const auto table = graph::query(graph_, dec.env, dec.task);
    dec.table_digest = sha256_hex(graph::score_table_csv(table));
    for (int i = 0; i < kTopRows && i < static_cast<int>(table.entries.size()); ++i) {
      dec.top.push_back(table.entries[i]);
    }
    dec.dispatch = graph::dispatch(table, graph_.settings.alpha_high, graph_.settings.alpha_low,
                                   graph_.settings.max_blend);
    dec.expected = ts.expected;
    dec.success = decision_matches(dec.dispatch, dec.expected);

    TeamPolicy installed;
    installed.dispatch = dec.dispatch;
    for (const auto& m : dec.dispatch.members) installed.skills.push_back(skill(m.name));
    if (dec.dispatch.band == graph::Band::kFinetune) {
      if (options_.allow_finetune) {
        auto cfg = options_.finetune_config;
        cfg.seed = mix(seed_, 100 + static_cast<std::uint64_t>(stage));
        const auto world = marl::default_training_world(dec.env, dec.task, options_.finetune_team_size);
        const std::string name = dec.dispatch.members[0].name + "_ft_s" + std::to_string(stage + 1);
        auto ft = graph::finetune(dec.dispatch, *installed.skills[0], name, world, cfg, false, 1);
        auto rec = std::make_shared<const marl::SkillRecord>(ft.tuned);
        result_.finetuned.push_back(ft.tuned);
        installed.dispatch = {graph::Band::kReuse, {{-1, name, 1.0}}};
        installed.skills = {rec};
        dec.note = "fine-tuned " + name + " from " + dec.dispatch.members[0].name;
      } else {
        dec.note = "finetune deferred; running " + dec.dispatch.members[0].name;
      }
    }
    spdlog::info("seed {} stage {}: {} [{}]{}", seed_, dec.stage, graph::to_string(dec.dispatch.band),
                 fmt::join(dispatched_set(dec.dispatch), ","), dec.success ? "" : " (unexpected)");
    result_.decisions.push_back(std::move(dec));
    installed_.push_back(std::move(installed));
    return static_cast<int>(result_.decisions.size()) - 1;
  }

  sim::Vec2 scripted_flocking(const sim::AgentState& a) const {
    // chase the team's leader, or the living centroid without one
    for (const auto& o : world_.agents()) {
      if (o.alive && o.is_leader && o.team == a.team && o.id != a.id) {
        return sim::force_to_action(
            sim::pursuit_force(a.p, a.v, a.p + world_.displacement(a.p, o.p), o.v, options_.pursuit_kp,
                               options_.pursuit_kv),
            world_.config().max_force);
      }
    }
    const sim::Vec2 c = world_.team_centroid(a.team);
    return sim::force_to_action(
        sim::pursuit_force(a.p, a.v, a.p + world_.displacement(a.p, c), {}, options_.pursuit_kp, options_.pursuit_kv),
        world_.config().max_force);
  }

  sim::Vec2 action_for(const sim::AgentState& a, int stage) {
    const auto& pol = policies_[static_cast<std::size_t>(a.team)];
    if (!pol.active) return {};
    const auto& task = spec_.stages[stage].teams[static_cast<std::size_t>(a.team)].task;
    const bool flocking = task.kind == sim::TaskKind::kFlocking;
    if (flocking && a.is_leader && world_.leader_path(a.id) != nullptr) return world_.leader_policy(a.id);
    if (pol.scripted) {
      return flocking ? scripted_flocking(a) : world_.scripted_pursuit(a.id, options_.pursuit_kp, options_.pursuit_kv);
    }
    const auto obs = world_.observe(a.id);
    if (pol.skills.size() == 1) return marl::act(pol.skills[0]->policy, obs, false, nullptr);
    std::vector<const marl::SkillRecord*> ptrs;
    for (const auto& s : pol.skills) ptrs.push_back(s.get());
    return graph::blended_act(pol.dispatch, ptrs, obs);
  }

  const ScenarioSpec& spec_;
  const SkillRegistry& registry_;
  const graph::GraphModel& graph_;
  std::uint64_t seed_;
  RunOptions options_;
  sim::World world_;
  ScenarioResult result_;
  std::vector<TeamPolicy> policies_;
  std::vector<TeamPolicy> installed_;  // per decision
  std::map<std::string, SkillPtr> cache_;
};

}  // namespace

std::vector<std::string> dispatched_set(const graph::DispatchDecision& d) {
  std::vector<std::string> names;
  for (const auto& m : d.members) names.push_back(m.name);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

bool decision_matches(const graph::DispatchDecision& d, const std::vector<std::string>& expected) {
  auto want = expected;
  std::sort(want.begin(), want.end());
  want.erase(std::unique(want.begin(), want.end()), want.end());
  return dispatched_set(d) == want;
}

double decision_success_rate(const DecisionLog& log) {
  if (log.empty()) throw InvalidInput("decision_success_rate: empty decision log");
  const auto n = std::count_if(log.begin(), log.end(), [](const Decision& d) { return d.success; });
  return static_cast<double>(n) / static_cast<double>(log.size());
}

double decision_success_rate(const std::vector<DecisionLog>& logs) {
  DecisionLog all;
  for (const auto& l : logs) all.insert(all.end(), l.begin(), l.end());
  return decision_success_rate(all);
}

ScenarioResult run_scenario(const ScenarioSpec& spec, const SkillRegistry& registry,
                            const graph::GraphModel& graph, std::uint64_t seed, const RunOptions& options) {
  spec.validate();
  if (!graph.trained) spdlog::warn("run_scenario: graph has not been trained");
  return Runner(spec, registry, graph, seed, options).run();
}

std::vector<ScenarioResult> run_scenarios(const ScenarioSpec& spec, const SkillRegistry& registry,
                                          const graph::GraphModel& graph,
                                          const std::vector<std::uint64_t>& seeds, int threads,
                                          const RunOptions& options) {
  std::vector<ScenarioResult> out(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      try {
        out[i] = run_scenario(spec, registry, graph, seeds[i], options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = seeds.size();
      }
    }
  };
  const int n = std::clamp(threads, 1, std::max(1, static_cast<int>(seeds.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

Json to_json(const Decision& d, std::uint64_t seed) {
  Json teams = Json::array();
  for (const auto t : d.teams) teams.push_back(sim::to_string(t));
  Json members = Json::array();
  for (const auto& m : d.dispatch.members) members.push_back({{"skill", m.name}, {"weight", m.weight}});
  Json top = Json::array();
  for (const auto& e : d.top) top.push_back({{"skill", e.name}, {"s_env", e.s_env}, {"s_task", e.s_task}, {"s", e.s}});
  Json j = {{"seed", seed},
            {"stage", d.stage},
            {"tick", d.tick},
            {"teams", teams},
            {"env", d.env.values()},
            {"task", d.task.values()},
            {"table_sha256", d.table_digest},
            {"top", top},
            {"band", graph::to_string(d.dispatch.band)},
            {"members", members},
            {"expected", d.expected},
            {"success", d.success}};
  if (!d.note.empty()) j["note"] = d.note;
  return j;
}

void write_decisions_jsonl(const std::filesystem::path& path, const std::vector<ScenarioResult>& runs) {
  std::string text;
  for (const auto& r : runs) {
    for (const auto& d : r.decisions) text += to_json(d, r.seed).dump() + "\n";
  }
  write_file_atomic(path, text);
}

void write_stage_summary_csv(const std::filesystem::path& path, const std::vector<ScenarioResult>& runs) {
  std::string text = "seed,stage,name,entry_tick,exit_tick,green_alive,red_alive,exit_reason\n";
  for (const auto& r : runs) {
    for (const auto& s : r.stages) {
      text += fmt::format("{},{},{},{},{},{},{},{}\n", r.seed, s.stage, s.name, s.entry_tick, s.exit_tick,
                          s.green_alive, s.red_alive, s.exit_reason);
    }
  }
  write_file_atomic(path, text);
}

void write_trajectory_csv(const std::filesystem::path& path, const ScenarioResult& run) {
  std::string text = "tick,stage,id,team,x,y,vx,vy,hp,alive\n";
  for (const auto& f : run.trajectory) {
    for (const auto& a : f.agents) {
      text += fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.4f},{}\n", f.tick, f.stage + 1, a.id,
                          sim::to_string(a.team), a.p.x, a.p.y, a.v.x, a.v.y, a.hp, a.alive ? 1 : 0);
    }
  }
  write_file_atomic(path, text);
}

}  // namespace sgswarm::orch
