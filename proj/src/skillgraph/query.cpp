#include "sgswarm/skillgraph/query.hpp"

#include <algorithm>
#include <sstream>

#include <spdlog/spdlog.h>

#include "sgswarm/error.hpp"
#include "sgswarm/skillgraph/transh.hpp"

namespace sgswarm::graph {

const ScoreEntry& ScoreTable::top() const {
  if (entries.empty()) throw InvalidInput("empty score table");
  return entries.front();
}

ScoreTable query(const GraphModel& model, const sim::EnvFeature& env, const sim::TaskFeature& task) {
  if (!model.trained) spdlog::warn("querying an untrained skill graph");
  const num::Vector e = model.encode(EntityFeature::environment(env));
  const num::Vector t = model.encode(EntityFeature::task(task));
  const double lambda = model.settings.lambda;
  ScoreTable table;
  for (int k = 0; k < model.skill_count(); ++k) {
    const num::Vector b = model.skill_embeddings.col(k);
    ScoreEntry s;
    s.skill = k;
    s.name = model.skills[static_cast<std::size_t>(k)].name;
    s.s_env = transh_score(e, model.normal(RelationId::kEnvToSkill), model.translation(RelationId::kEnvToSkill), b, lambda);
    s.s_task = transh_score(t, model.normal(RelationId::kTaskToSkill), model.translation(RelationId::kTaskToSkill), b, lambda);
    s.s = s.s_env * s.s_task;
    table.entries.push_back(s);
  }
  std::stable_sort(table.entries.begin(), table.entries.end(),
                   [](const ScoreEntry& a, const ScoreEntry& b) { return a.s > b.s; });
  return table;
}

std::string score_table_csv(const ScoreTable& table) {
  std::ostringstream out;
  out.precision(6);
  out << "skill,S_env,S_task,S\n";
  for (const auto& e : table.entries) out << e.name << ',' << e.s_env << ',' << e.s_task << ',' << e.s << '\n';
  return out.str();
}

std::string to_string(Band band) {
  switch (band) {
    case Band::kReuse: return "reuse";
    case Band::kBlend: return "blend";
    case Band::kFinetune: return "finetune";
  }
  return "?";
}

DispatchDecision dispatch(const ScoreTable& table, double alpha_high, double alpha_low, int max_blend) {
  if (table.entries.empty()) throw InvalidInput("cannot dispatch on an empty score table");
  if (!(alpha_low >= 0.0 && alpha_low < alpha_high && alpha_high <= 1.0)) {
    throw InvalidInput("thresholds must satisfy 0 <= alpha_low < alpha_high <= 1");
  }
  if (max_blend < 1) throw InvalidInput("max_blend must be >= 1");
  const auto& top = table.top();
  DispatchDecision d;
  if (top.s > alpha_high) {
    d.band = Band::kReuse;
    d.members.push_back({top.skill, top.name, 1.0});
    return d;
  }
  for (const auto& e : table.entries) {
    if (e.s > alpha_low && e.s <= alpha_high && static_cast<int>(d.members.size()) < max_blend) {
      d.members.push_back({e.skill, e.name, e.s});
    }
  }
  if (d.members.empty()) {
    d.band = Band::kFinetune;
    d.members.push_back({top.skill, top.name, 1.0});
    return d;
  }
  d.band = Band::kBlend;
  double sum = 0.0;
  for (const auto& m : d.members) sum += m.weight;
  for (auto& m : d.members) m.weight /= sum;
  return d;
}

sim::Vec2 blended_act(const DispatchDecision& decision, std::span<const marl::SkillRecord* const> skills,
                      std::span<const double> obs) {
  if (decision.band != Band::kBlend) throw InvalidInput("blended_act needs a blend decision");
  if (skills.size() != decision.members.size()) throw InvalidInput("one skill record per blend member is required");
  sim::Vec2 a{};
  for (std::size_t k = 0; k < skills.size(); ++k) {
    if (skills[k] == nullptr) throw InvalidInput("missing blend member record");
    if (skills[k]->policy.kind != skills[0]->policy.kind) throw InvalidInput("blend members mix task kinds");
    a += decision.members[k].weight * marl::act(skills[k]->policy, obs, false, nullptr);
  }
  return {std::clamp(a.x, -1.0, 1.0), std::clamp(a.y, -1.0, 1.0)};
}

FinetuneResult finetune(const DispatchDecision& decision, const marl::SkillRecord& seed_skill,
                        const std::string& name, const sim::WorldConfig& world,
                        const marl::TrainConfig& config, bool with_baseline, int threads) {
  if (decision.band != Band::kFinetune) throw InvalidInput("finetune needs a finetune decision");
  if (decision.members.empty() || decision.members[0].name != seed_skill.name) {
    throw InvalidInput("seed skill '" + seed_skill.name + "' is not the decision's top skill");
  }
  std::vector<marl::TrainJob> jobs{{name, world, config, &seed_skill}};
  if (with_baseline) jobs.push_back({name + "_scratch", world, config, nullptr});
  auto out = marl::train_skills(jobs, threads);
  FinetuneResult r{std::move(out[0]), std::nullopt};
  if (with_baseline) r.scratch = std::move(out[1]);
  return r;
}

}  // namespace sgswarm::graph
