#include "sgswarm/orchestrator/scenario.hpp"

#include "sgswarm/error.hpp"
#include "sgswarm/swarmsim/config_io.hpp"

namespace sgswarm::orch {

namespace {

int rank(EntryCondition c) { return static_cast<int>(c); }

Json team_stage_to_json(const TeamStage& t) {
  Json j = {{"task", t.task.values()}, {"source", to_string(t.source)}};
  if (t.source == PolicySource::kFixedSkill) j["skill"] = t.skill;
  if (!t.expected.empty()) j["expected"] = t.expected;
  return j;
}

TeamStage team_stage_from_json(const Json& j, const std::string& path) {
  TeamStage t;
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  if (!j.contains("task")) throw ConfigError(path + ".task", "missing required key");
  t.task = sim::task_feature_from_json(j.at("task"), path + ".task");
  t.source = policy_source_from_string(json_get_or<std::string>(j, "source", "graph-query", path));
  t.skill = json_get_or<std::string>(j, "skill", "", path);
  t.expected = json_get_or<std::vector<std::string>>(j, "expected", {}, path);
  return t;
}

}  // namespace

std::string to_string(EntryCondition c) {
  switch (c) {
    case EntryCondition::kStart: return "start";
    case EntryCondition::kEncounter: return "encounter";
    case EntryCondition::kTeamEliminated: return "team-eliminated";
  }
  return "?";
}

EntryCondition entry_condition_from_string(const std::string& s) {
  if (s == "start") return EntryCondition::kStart;
  if (s == "encounter") return EntryCondition::kEncounter;
  if (s == "team-eliminated") return EntryCondition::kTeamEliminated;
  throw InvalidInput("unknown entry condition '" + s + "' (expected start, encounter or team-eliminated)");
}

std::string to_string(PolicySource s) {
  switch (s) {
    case PolicySource::kGraphQuery: return "graph-query";
    case PolicySource::kScripted: return "scripted";
    case PolicySource::kFixedSkill: return "fixed-skill";
  }
  return "?";
}

PolicySource policy_source_from_string(const std::string& s) {
  if (s == "graph-query") return PolicySource::kGraphQuery;
  if (s == "scripted") return PolicySource::kScripted;
  if (s == "fixed-skill") return PolicySource::kFixedSkill;
  throw InvalidInput("unknown policy source '" + s + "' (expected graph-query, scripted or fixed-skill)");
}

void ScenarioSpec::validate() const {
  try {
    world.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError("scenario.world", e.what());
  }
  if (stages.empty()) throw ConfigError("scenario.stages", "at least one stage is required");
  if (record_every < 0) throw ConfigError("scenario.record_every", "must be >= 0");
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string path = "scenario.stages[" + std::to_string(s) + "]";
    const auto& st = stages[s];
    if (s == 0 && st.entry != EntryCondition::kStart) {
      throw ConfigError(path + ".entry", "the first stage must use the start condition");
    }
    if (s > 0 && rank(st.entry) <= rank(stages[s - 1].entry)) {
      throw ConfigError(path + ".entry", "entry conditions must follow start, encounter, team-eliminated order");
    }
    if (st.entry == EntryCondition::kEncounter || st.entry == EntryCondition::kTeamEliminated) {
      if (team_count() != 2) throw ConfigError(path + ".entry", to_string(st.entry) + " needs two teams");
    }
    if (st.max_steps < 1) throw ConfigError(path + ".max_steps", "must be >= 1");
    if (static_cast<int>(st.teams.size()) != team_count()) {
      throw ConfigError(path + ".teams", "expected one entry per world team (" + std::to_string(team_count()) + ")");
    }
    for (std::size_t t = 0; t < st.teams.size(); ++t) {
      const std::string tp = path + ".teams[" + std::to_string(t) + "]";
      const auto& ts = st.teams[t];
      try {
        ts.task.validate();
      } catch (const InvalidInput& e) {
        throw ConfigError(tp + ".task", e.what());
      }
      if (ts.source == PolicySource::kFixedSkill && ts.skill.empty()) {
        throw ConfigError(tp + ".skill", "fixed-skill source needs a skill name");
      }
      if (ts.source == PolicySource::kGraphQuery && ts.expected.empty()) {
        throw ConfigError(tp + ".expected", "graph-query source needs the expected skill set");
      }
      // teams sharing a query must agree on what it should return
      for (std::size_t u = 0; u < t; ++u) {
        const auto& other = st.teams[u];
        if (other.source == PolicySource::kGraphQuery && ts.source == PolicySource::kGraphQuery &&
            other.task == ts.task && other.expected != ts.expected) {
          throw ConfigError(tp + ".expected", "teams with the same task must expect the same skills");
        }
      }
    }
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].id != static_cast<int>(i)) throw ConfigError("scenario.agents", "ids must be 0..n-1");
  }
}

ScenarioSpec scenario_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  ScenarioSpec spec;
  const Json stages = json_get<Json>(j, "stages", path);
  if (!stages.is_array() || stages.empty()) throw ConfigError(path + ".stages", "expected a non-empty array");
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string sp = path + ".stages[" + std::to_string(s) + "]";
    const auto& sj = stages[s];
    Stage st;
    st.name = json_get_or<std::string>(sj, "name", "stage" + std::to_string(s + 1), sp);
    try {
      st.entry = entry_condition_from_string(json_get_or<std::string>(sj, "entry", s == 0 ? "start" : "", sp));
    } catch (const InvalidInput& e) {
      throw ConfigError(sp + ".entry", e.what());
    }
    st.max_steps = json_get_or<int>(sj, "max_steps", st.max_steps, sp);
    const Json teams = json_get<Json>(sj, "teams", sp);
    if (!teams.is_array()) throw ConfigError(sp + ".teams", "expected an array");
    for (std::size_t t = 0; t < teams.size(); ++t) {
      const std::string tp = sp + ".teams[" + std::to_string(t) + "]";
      try {
        st.teams.push_back(team_stage_from_json(teams[t], tp));
      } catch (const InvalidInput& e) {
        throw ConfigError(tp, e.what());
      }
    }
    spec.stages.push_back(std::move(st));
  }

  Json world = json_get<Json>(j, "world", path);
  if (world.is_object() && world.contains("teams") && world["teams"].is_array()) {
    auto& teams = world["teams"];
    for (std::size_t t = 0; t < teams.size() && t < spec.stages[0].teams.size(); ++t) {
      if (teams[t].is_object() && !teams[t].contains("task")) {
        teams[t]["task"] = spec.stages[0].teams[t].task.values();
      }
    }
  }
  spec.world = sim::world_config_from_json(world, path + ".world");
  for (std::size_t t = 0; t < spec.world.teams.size() && t < spec.stages[0].teams.size(); ++t) {
    spec.world.teams[t].task = spec.stages[0].teams[t].task;
  }

  if (j.contains("agents")) {
    const auto& aj = j.at("agents");
    if (!aj.is_array()) throw ConfigError(path + ".agents", "expected an array");
    for (std::size_t i = 0; i < aj.size(); ++i) {
      const std::string ap = path + ".agents[" + std::to_string(i) + "]";
      const auto& row = aj[i];
      if (!row.is_array() || row.size() < 5 || row.size() > 6) {
        throw ConfigError(ap, "expected [team, x, y, vx, vy, leader?]");
      }
      sim::AgentState a;
      a.id = static_cast<int>(i);
      try {
        a.team = sim::team_from_string(row[0].get<std::string>());
        a.p = {row[1].get<double>(), row[2].get<double>()};
        a.v = {row[3].get<double>(), row[4].get<double>()};
        a.is_leader = row.size() == 6 && row[5].get<bool>();
      } catch (const std::exception& e) {
        throw ConfigError(ap, e.what());
      }
      a.hp = spec.world.hp_max;
      spec.agents.push_back(a);
    }
  }
  spec.record_every = json_get_or<int>(j, "record_every", spec.record_every, path);
  spec.validate();
  return spec;
}

Json to_json(const ScenarioSpec& spec) {
  Json stages = Json::array();
  for (const auto& st : spec.stages) {
    Json teams = Json::array();
    for (const auto& t : st.teams) teams.push_back(team_stage_to_json(t));
    stages.push_back({{"name", st.name}, {"entry", to_string(st.entry)}, {"max_steps", st.max_steps}, {"teams", teams}});
  }
  Json j = {{"world", sim::to_json(spec.world)}, {"stages", stages}, {"record_every", spec.record_every}};
  if (!spec.agents.empty()) {
    Json agents = Json::array();
    for (const auto& a : spec.agents) {
      agents.push_back({sim::to_string(a.team), a.p.x, a.p.y, a.v.x, a.v.y, a.is_leader});
    }
    j["agents"] = agents;
  }
  return j;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path), "scenario");
}

ScenarioSpec default_scenario(int team_size, const sim::TaskFeature& stage3_task,
                              std::vector<std::string> stage3_expected) {
  const auto flock = sim::TaskFeature::flocking(1, 0, 0.4, 3);
  const auto battle = sim::TaskFeature::adversarial(1, 0, 1, 3, 0.3);
  ScenarioSpec spec;
  spec.world.env = {sim::Boundary::kFixed, 6.0};
  sim::TeamConfig green;
  green.count = team_size;
  green.task = flock;
  green.spawn_center = {0.9, 0.9};
  green.spawn_half_extent = 0.45;
  green.leader_paths.push_back({{{0.9, 0.9}, {5.1, 5.1}}, 0.2});
  sim::TeamConfig red = green;
  red.spawn_center = {5.1, 5.1};
  red.leader_paths = {{{{5.1, 5.1}, {0.9, 0.9}}, 0.2}};
  spec.world.teams = {green, red};

  const TeamStage s1{flock, PolicySource::kGraphQuery, "", {"floc_3_fixed"}};
  const TeamStage s2_green{battle, PolicySource::kGraphQuery, "", {"adve_2_fixed"}};
  const TeamStage s2_red{battle, PolicySource::kScripted, "", {}};
  const TeamStage s3{stage3_task, PolicySource::kGraphQuery, "", std::move(stage3_expected)};
  spec.stages = {{"flock", EntryCondition::kStart, 600, {s1, s1}},
                 {"battle", EntryCondition::kEncounter, 2000, {s2_green, s2_red}},
                 {"regroup", EntryCondition::kTeamEliminated, 300, {s3, s3}}};
  spec.validate();
  return spec;
}

ScenarioSpec blend_scenario(int team_size) {
  return default_scenario(team_size, sim::TaskFeature::flocking(1, 0, 0.6, 3), {"floc_3_fixed", "floc_4_fixed"});
}

ScenarioSpec in_library_scenario(int team_size) {
  return default_scenario(team_size, sim::TaskFeature::flocking(1, 0, 0.8, 3), {"floc_4_fixed"});
}

}  // namespace sgswarm::orch
