#include "sgswarm/skillgraph/samples.hpp"

#include <algorithm>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "sgswarm/error.hpp"

namespace sgswarm::graph {

std::string to_string(RelationId r) { return r == RelationId::kEnvToSkill ? "env->skill" : "task->skill"; }

std::string to_string(SampleKind k) {
  switch (k) {
    case SampleKind::kPositive: return "positive";
    case SampleKind::kNegative: return "negative";
    case SampleKind::kSoft: return "soft";
  }
  return "?";
}

std::vector<SkillEntry> reference_library() {
  std::vector<sim::TaskFeature> floc, adve;
  for (double r_perc : {2.0, 3.0, 4.0, 5.0}) {
    for (double d_ref : {0.4, 0.8}) floc.push_back(sim::TaskFeature::flocking(1, 0, d_ref, r_perc));
  }
  for (double r_atta : {0.3, 0.4}) {
    for (int n_o : {2, 3, 4, 5}) adve.push_back(sim::TaskFeature::adversarial(1, 0, 1, n_o, r_atta));
  }
  const std::pair<const char*, sim::EnvFeature> envs[] = {{"fixed", {sim::Boundary::kFixed, 6.0}},
                                                          {"periodic", {sim::Boundary::kPeriodic, 6.0}}};
  std::vector<SkillEntry> out;
  for (const auto& [label, env] : envs) {
    for (std::size_t k = 0; k < floc.size(); ++k) {
      out.push_back({"floc_" + std::to_string(k + 1) + "_" + label, env, floc[k], ""});
    }
    for (std::size_t k = 0; k < adve.size(); ++k) {
      out.push_back({"adve_" + std::to_string(k + 1) + "_" + label, env, adve[k], ""});
    }
  }
  return out;
}

namespace {

bool same_triple(const Triple& a, const Triple& b) {
  return a.head == b.head && a.relation == b.relation && a.tail == b.tail;
}

}  // namespace

std::vector<Triple> build_samples(const std::vector<SkillEntry>& skills, const SampleOptions& options) {
  if (skills.empty()) throw InvalidInput("cannot build samples from an empty library");
  if (options.max_negatives_per_positive < 1) throw InvalidInput("max_negatives_per_positive must be >= 1");
  options.weights.validate();
  if (skills.size() == 1) spdlog::warn("single-skill library: no wrong-tail negatives or soft samples");

  std::vector<EntityFeature> env_of, task_of;
  std::set<EntityFeature> envs, tasks;
  for (const auto& s : skills) {
    env_of.push_back(EntityFeature::environment(s.env));
    task_of.push_back(EntityFeature::task(s.task));
    envs.insert(env_of.back());
    tasks.insert(task_of.back());
  }

  std::mt19937_64 rng(options.seed);
  std::vector<Triple> out;
  auto add = [&out](Triple t) {
    for (const auto& o : out) {
      if (same_triple(o, t)) return;
    }
    out.push_back(std::move(t));
  };

  const auto n = static_cast<int>(skills.size());
  for (int s = 0; s < n; ++s) {
    const EntityFeature heads[2] = {env_of[s], task_of[s]};
    for (int r = 0; r < 2; ++r) {
      const auto rel = static_cast<RelationId>(r);
      const auto& head = heads[r];
      add({head, rel, s, SampleKind::kPositive, 0.0});
      add({head, static_cast<RelationId>(1 - r), s, SampleKind::kNegative, 0.0});

      std::vector<Triple> pool;
      if (rel == RelationId::kTaskToSkill) {
        for (int o = 0; o < n; ++o) {
          if (skills[o].task.kind != skills[s].task.kind) pool.push_back({head, rel, o, SampleKind::kNegative, 0.0});
        }
      }
      for (const auto& e : rel == RelationId::kEnvToSkill ? envs : tasks) {
        if (e != head) pool.push_back({head, rel, e, SampleKind::kNegative, 0.0});
      }
      const auto keep = static_cast<std::size_t>(options.max_negatives_per_positive - 1);
      if (pool.size() > keep) {
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(keep);
      }
      for (auto& t : pool) add(std::move(t));
    }
  }

  for (int s = 0; s < n; ++s) {
    for (const auto& e : envs) {
      if (e == env_of[s]) continue;
      const double d = delta(e, env_of[s], options.weights);
      if (d > 0.0) add({e, RelationId::kEnvToSkill, s, SampleKind::kSoft, d});
    }
    for (const auto& t : tasks) {
      if (t == task_of[s] || t.task_kind != task_of[s].task_kind) continue;
      const double d = delta(t, task_of[s], options.weights);
      if (d > 0.0) add({t, RelationId::kTaskToSkill, s, SampleKind::kSoft, d});
    }
  }
  return out;
}

SampleCounts count_samples(const std::vector<Triple>& samples) {
  SampleCounts c;
  for (const auto& t : samples) {
    if (t.kind == SampleKind::kPositive) ++c.positive;
    if (t.kind == SampleKind::kNegative) ++c.negative;
    if (t.kind == SampleKind::kSoft) ++c.soft;
  }
  return c;
}

}  // namespace sgswarm::graph
