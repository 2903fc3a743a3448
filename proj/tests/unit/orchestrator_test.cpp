#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "sgswarm/error.hpp"
#include "sgswarm/orchestrator/run.hpp"
#include "sgswarm/skillgraph/bundle.hpp"

namespace sgswarm::orch {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("sgswarm_orch_" + name);
  fs::remove_all(dir);
  return dir;
}

marl::TrainConfig tiny_config(sim::TaskKind kind) {
  auto c = marl::TrainConfig::defaults(kind);
  c.hidden_size = 8;
  c.hidden_layers = 1;
  return c;
}

marl::SkillRecord tiny_skill(const graph::SkillEntry& e, std::uint64_t seed = 0) {
  auto c = tiny_config(e.task.kind);
  c.seed = seed;
  return marl::make_untrained_skill(e.name, e.env, e.task, c);
}

// 32 placeholder skills and an untrained toy graph over them; shared by the scenario tests.
class ScenarioFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(scratch_dir("fixture"));
    registry_ = new SkillRegistry(SkillRegistry::create(*dir_));
    std::uint64_t seed = 0;
    for (const auto& e : graph::reference_library()) registry_->add(tiny_skill(e, seed++));
    graph::GraphSettings s;
    s.dim = 8;
    s.hidden_size = 8;
    s.hidden_layers = 1;
    graph_ = new graph::GraphModel(graph::GraphModel::make(registry_->skill_entries(), s));
  }
  static void TearDownTestSuite() {
    delete graph_;
    delete registry_;
    fs::remove_all(*dir_);
    delete dir_;
  }

  static ScenarioSpec small_scenario() {
    auto spec = in_library_scenario(4);
    spec.stages[1].max_steps = 3000;
    spec.stages[2].max_steps = 50;
    return spec;
  }

  static fs::path* dir_;
  static SkillRegistry* registry_;
  static graph::GraphModel* graph_;
};

fs::path* ScenarioFixture::dir_ = nullptr;
SkillRegistry* ScenarioFixture::registry_ = nullptr;
graph::GraphModel* ScenarioFixture::graph_ = nullptr;

// ---- registry --------------------------------------------------------------

graph::SkillEntry floc_entry(const std::string& name) {
  return {name, {sim::Boundary::kFixed, 6}, sim::TaskFeature::flocking(1, 0, 0.4, 3), ""};
}

TEST(Registry, AddThenListShowsTrainedProvenance) {
  const auto dir = scratch_dir("add");
  auto reg = SkillRegistry::create(dir);
  const auto& e = reg.add(tiny_skill(floc_entry("floc_a")));
  EXPECT_EQ(e.id, 1);
  EXPECT_EQ(e.provenance, Provenance::kTrained);
  EXPECT_FALSE(e.files.empty());
  const auto reopened = SkillRegistry::open(dir);
  ASSERT_EQ(reopened.entries().size(), 1u);
  EXPECT_EQ(reopened.entries()[0].name, "floc_a");
  EXPECT_EQ(reopened.entries()[0].provenance, Provenance::kTrained);
  EXPECT_NO_THROW(reopened.verify());
  const auto rec = reopened.load("floc_a");
  EXPECT_EQ(rec.task, sim::TaskFeature::flocking(1, 0, 0.4, 3));
  fs::remove_all(dir);
}

TEST(Registry, DuplicateNamesAndUnknownParentsAreRejected) {
  const auto dir = scratch_dir("dup");
  auto reg = SkillRegistry::create(dir);
  reg.add(tiny_skill(floc_entry("floc_a")));
  EXPECT_THROW(reg.add(tiny_skill(floc_entry("floc_a"))), InvalidInput);
  auto orphan = tiny_skill(floc_entry("floc_b"));
  orphan.parent = "nowhere";
  EXPECT_THROW(reg.add(orphan), InvalidInput);
  EXPECT_THROW(reg.add(tiny_skill(floc_entry("../escape"))), InvalidInput);
  EXPECT_EQ(reg.entries().size(), 1u);
  fs::remove_all(dir);
}

TEST(Registry, BitFlipFailsVerifyNamingTheSkill) {
  const auto dir = scratch_dir("flip");
  auto reg = SkillRegistry::create(dir);
  reg.add(tiny_skill(floc_entry("floc_a")));
  const auto& e = reg.add(tiny_skill(floc_entry("floc_b"), 7));
  fs::path victim;
  for (const auto& [file, hash] : e.files) {
    if (file.find("actor") != std::string::npos) victim = dir / e.dir / file;
  }
  ASSERT_FALSE(victim.empty());
  {
    std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(static_cast<std::streamoff>(fs::file_size(victim) / 2));
    char c = 0;
    f.read(&c, 1);
    c = static_cast<char>(c ^ 0x10);
    f.seekp(static_cast<std::streamoff>(fs::file_size(victim) / 2));
    f.write(&c, 1);
  }
  EXPECT_NO_THROW(reg.verify("floc_a"));
  try {
    reg.verify();
    FAIL() << "verify accepted a damaged file";
  } catch (const IntegrityError& err) {
    EXPECT_NE(std::string(err.what()).find("floc_b"), std::string::npos);
  }
  EXPECT_THROW(reg.load("floc_b"), IntegrityError);
  fs::remove_all(dir);
}

TEST(Registry, MissingFileFailsOpen) {
  const auto dir = scratch_dir("missing");
  auto reg = SkillRegistry::create(dir);
  const auto& e = reg.add(tiny_skill(floc_entry("floc_a")));
  fs::remove(dir / e.dir / e.files.begin()->first);
  EXPECT_THROW(SkillRegistry::open(dir), IntegrityError);
  EXPECT_THROW(SkillRegistry::open(dir / "nothing"), ConfigError);
  fs::remove_all(dir);
}

TEST(Registry, FineTunedChainResolvesToRoot) {
  const auto dir = scratch_dir("chain");
  auto reg = SkillRegistry::create(dir);
  reg.add(tiny_skill(floc_entry("root")));
  auto child = tiny_skill(floc_entry("child"));
  child.parent = "root";
  EXPECT_EQ(reg.add(child).provenance, Provenance::kFineTuned);
  auto grandchild = tiny_skill(floc_entry("grandchild"));
  grandchild.parent = "child";
  reg.add(grandchild);
  const auto chain = SkillRegistry::open(dir).lineage("grandchild");
  EXPECT_EQ(chain, (std::vector<std::string>{"grandchild", "child", "root"}));
  EXPECT_EQ(reg.find("grandchild").id, 3);
  fs::remove_all(dir);
}

TEST(Registry, GcIsDryRunByDefault) {
  const auto dir = scratch_dir("gc");
  auto reg = SkillRegistry::create(dir);
  reg.add(tiny_skill(floc_entry("floc_a")));
  fs::create_directories(dir / "skills" / "stale");
  std::ofstream(dir / "skills" / "stale" / "actor.net") << "old";
  std::ofstream(dir / "skills" / "floc_a" / "extra.bin") << "junk";
  const auto listed = reg.gc();
  EXPECT_EQ(listed.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "skills" / "stale" / "actor.net"));
  const auto removed = reg.gc(false);
  EXPECT_EQ(removed, listed);
  EXPECT_FALSE(fs::exists(dir / "skills" / "stale"));
  EXPECT_FALSE(fs::exists(dir / "skills" / "floc_a" / "extra.bin"));
  EXPECT_NO_THROW(reg.verify());
  EXPECT_TRUE(reg.gc().empty());
  fs::remove_all(dir);
}

TEST(Registry, ShaOfKnownString) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

// ---- scenario spec -----------------------------------------------------------

TEST(ScenarioSpec, JsonRoundTrip) {
  const auto spec = blend_scenario(10);
  const auto back = scenario_from_json(to_json(spec));
  EXPECT_EQ(to_json(back).dump(), to_json(spec).dump());
  ASSERT_EQ(back.stages.size(), 3u);
  EXPECT_EQ(back.stages[1].entry, EntryCondition::kEncounter);
  EXPECT_EQ(back.stages[2].teams[0].expected, (std::vector<std::string>{"floc_3_fixed", "floc_4_fixed"}));
}

TEST(ScenarioSpec, TasksMayBeOmittedFromTheWorld) {
  auto j = to_json(in_library_scenario(3));
  for (auto& t : j["world"]["teams"]) t.erase("task");
  const auto spec = scenario_from_json(j);
  EXPECT_EQ(spec.world.teams[0].task, sim::TaskFeature::flocking(1, 0, 0.4, 3));
}

TEST(ScenarioSpec, RejectsBadStageOrder) {
  auto spec = in_library_scenario(3);
  std::swap(spec.stages[1], spec.stages[2]);
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = in_library_scenario(3);
  spec.stages[0].entry = EntryCondition::kEncounter;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = in_library_scenario(3);
  spec.stages[2].entry = EntryCondition::kStart;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(ScenarioSpec, RejectsIncompleteTeams) {
  auto spec = in_library_scenario(3);
  spec.stages[0].teams.pop_back();
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = in_library_scenario(3);
  spec.stages[0].teams[0].expected.clear();
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = in_library_scenario(3);
  spec.stages[1].teams[1].source = PolicySource::kFixedSkill;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = in_library_scenario(3);
  spec.stages[0].teams[1].expected = {"floc_1_fixed"};
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(ScenarioSpec, ErrorsNameTheKey) {
  auto j = to_json(in_library_scenario(3));
  j["stages"][1]["entry"] = "sometime";
  try {
    scenario_from_json(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key_path(), "scenario.stages[1].entry");
  }
}

// ---- success rate -----------------------------------------------------------

Decision decision(std::vector<std::string> dispatched, std::vector<std::string> expected) {
  Decision d;
  d.dispatch.band = dispatched.size() > 1 ? graph::Band::kBlend : graph::Band::kReuse;
  for (const auto& n : dispatched) d.dispatch.members.push_back({0, n, 1.0});
  d.expected = std::move(expected);
  d.success = decision_matches(d.dispatch, d.expected);
  return d;
}

TEST(SuccessRate, ThreeOfThree) {
  const DecisionLog log{decision({"floc_3_fixed"}, {"floc_3_fixed"}), decision({"adve_2_fixed"}, {"adve_2_fixed"}),
                        decision({"floc_4_fixed", "floc_3_fixed"}, {"floc_3_fixed", "floc_4_fixed"})};
  EXPECT_DOUBLE_EQ(decision_success_rate(log), 1.0);
}

TEST(SuccessRate, ThreeOfFour) {
  const DecisionLog log{decision({"floc_3_fixed"}, {"floc_3_fixed"}), decision({"adve_2_fixed"}, {"adve_2_fixed"}),
                        decision({"floc_3_fixed"}, {"floc_3_fixed", "floc_4_fixed"}),
                        decision({"floc_4_fixed"}, {"floc_4_fixed"})};
  EXPECT_DOUBLE_EQ(decision_success_rate(log), 0.75);
}

TEST(SuccessRate, SubsetAndSupersetDoNotMatch) {
  EXPECT_FALSE(decision({"a", "b", "c"}, {"a", "b"}).success);
  EXPECT_FALSE(decision({"a"}, {"a", "b"}).success);
  EXPECT_TRUE(decision({"b", "a"}, {"a", "b"}).success);
}

TEST(SuccessRate, EmptyLogThrows) {
  EXPECT_THROW(decision_success_rate(DecisionLog{}), InvalidInput);
  EXPECT_THROW(decision_success_rate(std::vector<DecisionLog>{{}, {}}), InvalidInput);
}

TEST(SuccessRate, PoolsAcrossRuns) {
  const std::vector<DecisionLog> logs{{decision({"a"}, {"a"})}, {decision({"a"}, {"b"}), decision({"b"}, {"b"})}};
  EXPECT_NEAR(decision_success_rate(logs), 2.0 / 3.0, 1e-15);
}

// ---- run_scenario ------------------------------------------------------------

TEST_F(ScenarioFixture, ThreeStagesThreeDecisions) {
  const auto r = run_scenario(small_scenario(), *registry_, *graph_, 1);
  ASSERT_FALSE(r.truncated) << r.diagnostic;
  ASSERT_EQ(r.stages.size(), 3u);
  ASSERT_EQ(r.decisions.size(), 3u);
  for (int s = 0; s < 3; ++s) EXPECT_EQ(r.decisions[s].stage, s + 1);
  EXPECT_EQ(r.decisions[0].teams.size(), 2u);  // one shared stage-1 query
  EXPECT_EQ(r.decisions[1].teams, std::vector<sim::Team>{sim::Team::kGreen});
  EXPECT_EQ(r.stages[2].exit_reason, "completed");
  for (const auto& d : r.decisions) {
    EXPECT_EQ(d.success, decision_matches(d.dispatch, d.expected));
    EXPECT_EQ(d.table_digest.size(), 64u);
    for (const auto& name : dispatched_set(d.dispatch)) EXPECT_TRUE(registry_->contains(name));
  }
}

TEST_F(ScenarioFixture, StagesNeverDecrease) {
  const auto r = run_scenario(small_scenario(), *registry_, *graph_, 2);
  ASSERT_FALSE(r.trajectory.empty());
  for (std::size_t k = 1; k < r.trajectory.size(); ++k) {
    EXPECT_GE(r.trajectory[k].stage, r.trajectory[k - 1].stage);
    EXPECT_GT(r.trajectory[k].tick, r.trajectory[k - 1].tick);
  }
  for (std::size_t s = 1; s < r.stages.size(); ++s) EXPECT_EQ(r.stages[s].entry_tick, r.stages[s - 1].exit_tick);
}

TEST_F(ScenarioFixture, BattleEndsAtFirstElimination) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = run_scenario(small_scenario(), *registry_, *graph_, seed);
    ASSERT_GE(r.stages.size(), 3u) << r.diagnostic;
    long first_zero = -1;
    for (const auto& f : r.trajectory) {
      int alive[2] = {0, 0};
      for (const auto& a : f.agents) alive[static_cast<int>(a.team)] += a.alive ? 1 : 0;
      if (alive[0] == 0 || alive[1] == 0) {
        first_zero = f.tick;
        break;
      }
    }
    EXPECT_EQ(r.stages[1].exit_tick, first_zero);
    EXPECT_TRUE(r.stages[1].green_alive == 0 || r.stages[1].red_alive == 0);
    EXPECT_GT(r.stages[1].green_alive + r.stages[1].red_alive, 0);
  }
}

TEST_F(ScenarioFixture, EncounterStartsTheBattle) {
  const auto spec = small_scenario();
  const auto r = run_scenario(spec, *registry_, *graph_, 4);
  const long t = r.stages[0].exit_tick;
  ASSERT_GT(t, 0);
  auto encounter_at = [&](const Frame& f) {
    for (int team = 0; team < 2; ++team) {
      sim::Vec2 c{};
      int n = 0;
      for (const auto& a : f.agents) {
        if (a.alive && static_cast<int>(a.team) != team) {
          c += a.p;
          ++n;
        }
      }
      c = c / static_cast<double>(n);
      for (const auto& a : f.agents) {
        if (a.alive && static_cast<int>(a.team) == team && (a.p - c).norm() <= 3.0) return true;
      }
    }
    return false;
  };
  for (const auto& f : r.trajectory) {
    if (f.tick < t) {
      EXPECT_FALSE(encounter_at(f)) << "tick " << f.tick;
    }
    if (f.tick == t) {
      EXPECT_TRUE(encounter_at(f));
    }
  }
}

TEST_F(ScenarioFixture, SameSeedSameLog) {
  const auto spec = small_scenario();
  const auto a = run_scenario(spec, *registry_, *graph_, 9);
  const auto b = run_scenario(spec, *registry_, *graph_, 9);
  ASSERT_EQ(a.decisions.size(), b.decisions.size());
  for (std::size_t k = 0; k < a.decisions.size(); ++k) {
    EXPECT_EQ(to_json(a.decisions[k], 9).dump(), to_json(b.decisions[k], 9).dump());
  }
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  const auto& fa = a.trajectory.back().agents;
  const auto& fb = b.trajectory.back().agents;
  for (std::size_t k = 0; k < fa.size(); ++k) {
    EXPECT_EQ(fa[k].p.x, fb[k].p.x);
    EXPECT_EQ(fa[k].hp, fb[k].hp);
  }
  const auto c = run_scenario(spec, *registry_, *graph_, 10);
  EXPECT_NE(c.trajectory.front().agents[1].p.x, a.trajectory.front().agents[1].p.x);  // agent 0 leads from the spawn centre
}

TEST_F(ScenarioFixture, ThreadedFanOutMatchesSequential) {
  auto spec = small_scenario();
  spec.record_every = 0;
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4};
  const auto par = run_scenarios(spec, *registry_, *graph_, seeds, 3);
  ASSERT_EQ(par.size(), seeds.size());
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const auto seq = run_scenario(spec, *registry_, *graph_, seeds[k]);
    EXPECT_EQ(par[k].seed, seeds[k]);
    ASSERT_EQ(par[k].stages.size(), seq.stages.size());
    for (std::size_t s = 0; s < seq.stages.size(); ++s) EXPECT_EQ(par[k].stages[s].exit_tick, seq.stages[s].exit_tick);
    EXPECT_TRUE(par[k].trajectory.empty());
  }
}

TEST_F(ScenarioFixture, DeadlockTruncatesWithDiagnostic) {
  auto spec = small_scenario();
  spec.stages[0].max_steps = 5;
  const auto r = run_scenario(spec, *registry_, *graph_, 1);
  EXPECT_TRUE(r.truncated);
  EXPECT_NE(r.diagnostic.find("encounter"), std::string::npos);
  ASSERT_EQ(r.stages.size(), 1u);
  EXPECT_EQ(r.stages[0].exit_reason, "truncated");
  EXPECT_EQ(r.stages[0].exit_tick, 5);
  EXPECT_EQ(r.decisions.size(), 1u);
}

TEST_F(ScenarioFixture, UnresolvableSkillIsAnError) {
  const auto dir = scratch_dir("partial");
  auto reg = SkillRegistry::create(dir);
  reg.add(registry_->load("floc_1_fixed"));
  EXPECT_THROW(run_scenario(small_scenario(), reg, *graph_, 1), IntegrityError);
  auto spec = small_scenario();
  spec.stages[0].teams[1].source = PolicySource::kFixedSkill;
  spec.stages[0].teams[1].skill = "not_a_skill";
  EXPECT_THROW(run_scenario(spec, *registry_, *graph_, 1), IntegrityError);
  fs::remove_all(dir);
}

TEST_F(ScenarioFixture, ExportsOneLinePerDecision) {
  const auto dir = scratch_dir("export");
  fs::create_directories(dir);
  const auto runs = run_scenarios(small_scenario(), *registry_, *graph_, {1, 2}, 1);
  write_decisions_jsonl(dir / "decisions.jsonl", runs);
  write_stage_summary_csv(dir / "stages.csv", runs);
  write_trajectory_csv(dir / "trajectory.csv", runs[0]);
  std::ifstream in(dir / "decisions.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = Json::parse(line);
    EXPECT_TRUE(j.contains("band"));
    EXPECT_TRUE(j.contains("success"));
    ++n;
  }
  EXPECT_EQ(n, static_cast<int>(runs[0].decisions.size() + runs[1].decisions.size()));
  std::ifstream csv(dir / "stages.csv");
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, static_cast<int>(runs[0].stages.size() + runs[1].stages.size()));
  fs::remove_all(dir);
}

// Point reflection through the arena centre maps green onto red when both
// teams run the same scripted controller from mirrored starts.
TEST(ScenarioMirror, ScriptedDuelIsPointSymmetric) {
  ScenarioSpec spec;
  spec.world.env = {sim::Boundary::kFixed, 6.0};
  const auto battle = sim::TaskFeature::adversarial(1, 0, 1, 3, 0.3);
  sim::TeamConfig team;
  team.count = 0;
  team.task = battle;
  spec.world.teams = {team, team};
  const std::vector<std::pair<sim::Vec2, sim::Vec2>> green{
      {{1.0, 1.5}, {0.2, 0.1}}, {{1.6, 0.8}, {0.1, 0.25}}, {{0.7, 2.2}, {0.3, -0.05}}, {{2.1, 1.9}, {0.0, 0.2}}};
  const double L = spec.world.env.side;
  int id = 0;
  for (const auto& [p, v] : green) spec.agents.push_back({id++, sim::Team::kGreen, p, v, 80.0, true, false});
  for (const auto& [p, v] : green) {
    spec.agents.push_back({id++, sim::Team::kRed, {L - p.x, L - p.y}, {-v.x, -v.y}, 80.0, true, false});
  }
  spec.stages = {{"duel", EntryCondition::kStart, 400, {{battle, PolicySource::kScripted, "", {}},
                                                      {battle, PolicySource::kScripted, "", {}}}}};
  const auto dir = scratch_dir("mirror");
  const auto reg = SkillRegistry::create(dir);
  const auto graph = graph::GraphModel::make({floc_entry("floc_a")}, graph::GraphSettings{});
  const auto r = run_scenario(spec, reg, graph, 5);
  EXPECT_TRUE(r.decisions.empty());
  ASSERT_EQ(r.trajectory.size(), 401u);
  const int n = static_cast<int>(green.size());
  for (const auto& f : r.trajectory) {
    for (int k = 0; k < n; ++k) {
      const auto& g = f.agents[k];
      const auto& m = f.agents[k + n];
      ASSERT_NEAR(g.p.x, L - m.p.x, 1e-9) << "tick " << f.tick;
      ASSERT_NEAR(g.p.y, L - m.p.y, 1e-9) << "tick " << f.tick;
      ASSERT_NEAR(g.v.x, -m.v.x, 1e-9);
      ASSERT_NEAR(g.v.y, -m.v.y, 1e-9);
      ASSERT_NEAR(g.hp, m.hp, 1e-9);
      ASSERT_EQ(g.alive, m.alive);
    }
  }
  fs::remove_all(dir);
}

}  // namespace
}  // namespace sgswarm::orch
