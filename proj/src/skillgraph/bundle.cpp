#include "sgswarm/skillgraph/bundle.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "sgswarm/error.hpp"
#include "sgswarm/numcore/init.hpp"
#include "sgswarm/numcore/serialization.hpp"

namespace sgswarm::graph {

namespace {

void write_matrix(const std::filesystem::path& path, const std::vector<const num::Matrix*>& blocks) {
  std::ostringstream out(std::ios::binary);
  for (const auto* m : blocks) num::write_f64_le(out, {m->data(), static_cast<std::size_t>(m->size())});
  write_file_atomic(path, out.str());
}

void read_matrix(const std::filesystem::path& path, const std::vector<num::Matrix*>& blocks) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("missing " + path.string());
  for (auto* m : blocks) num::read_f64_le(in, {m->data(), static_cast<std::size_t>(m->size())});
  if (in.peek() != std::char_traits<char>::eof()) throw IntegrityError("trailing bytes in " + path.string());
}

Json scaling_json(const InputScaling& in) {
  return {{"shift", std::vector<double>(in.shift.data(), in.shift.data() + in.shift.size())},
          {"scale", std::vector<double>(in.scale.data(), in.scale.data() + in.scale.size())}};
}

InputScaling scaling_from_json(const Json& j, int n) {
  const auto shift = j.at("shift").get<std::vector<double>>();
  const auto scale = j.at("scale").get<std::vector<double>>();
  if (static_cast<int>(shift.size()) != n || static_cast<int>(scale.size()) != n) {
    throw IntegrityError("input scaling has the wrong width");
  }
  InputScaling out = InputScaling::identity(n);
  for (int k = 0; k < n; ++k) {
    if (!(scale[static_cast<std::size_t>(k)] > 0.0)) throw IntegrityError("input scale must be positive");
    out.shift[k] = shift[static_cast<std::size_t>(k)];
    out.scale[k] = scale[static_cast<std::size_t>(k)];
  }
  return out;
}

}  // namespace

void save_graph(const GraphModel& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  num::save_net(dir / "env_encoder", m.env_encoder.spec, m.env_encoder.weights, m.settings.seed);
  num::save_net(dir / "task_encoder", m.task_encoder.spec, m.task_encoder.weights, m.settings.seed);
  write_matrix(dir / "embeddings.bin", {&m.skill_embeddings});
  write_matrix(dir / "relations.bin", {&m.relation_normals, &m.relation_translations});
  Json index = Json::array();
  for (int k = 0; k < m.skill_count(); ++k) {
    const auto& s = m.skills[static_cast<std::size_t>(k)];
    const auto env = s.env.values();
    index.push_back({{"id", k},
                     {"name", s.name},
                     {"env", std::vector<double>(env.begin(), env.end())},
                     {"task", s.task.values()},
                     {"record", s.record_path}});
  }
  write_file_atomic(dir / "skills.index", index.dump(1) + "\n");
  const Json meta{{"format_version", kGraphFormatVersion},
                  {"skill_count", m.skill_count()},
                  {"trained", m.trained},
                  {"env_input", scaling_json(m.env_input)},
                  {"task_input", scaling_json(m.task_input)},
                  {"settings", to_json(m.settings)}};
  write_file_atomic(dir / "graph.meta", meta.dump(2) + "\n");
}

GraphModel load_graph(const std::filesystem::path& dir) {
  const auto meta_path = dir / "graph.meta";
  if (!std::filesystem::exists(meta_path)) throw IntegrityError("missing " + meta_path.string());
  GraphModel m;
  try {
    const Json meta = read_json_file(meta_path);
    if (meta.at("format_version").get<int>() != kGraphFormatVersion) {
      throw IntegrityError("unsupported graph format in " + meta_path.string());
    }
    m.settings = graph_settings_from_json(meta.at("settings"), GraphSettings{}, "settings");
    m.trained = meta.at("trained").get<bool>();
    m.env_input = scaling_from_json(meta.at("env_input"), 2);
    m.task_input = scaling_from_json(meta.at("task_input"), 5);
    const Json index = read_json_file(dir / "skills.index");
    for (const auto& e : index) {
      SkillEntry s;
      s.name = e.at("name").get<std::string>();
      s.env = sim::EnvFeature::from_values(e.at("env").get<std::vector<double>>());
      s.task = sim::TaskFeature::from_values(e.at("task").get<std::vector<double>>());
      s.record_path = e.value("record", "");
      m.skills.push_back(std::move(s));
    }
    if (static_cast<int>(m.skills.size()) != meta.at("skill_count").get<int>()) {
      throw IntegrityError("skills.index does not match graph.meta skill_count");
    }
  } catch (const Json::exception& e) {
    throw IntegrityError("malformed graph bundle " + dir.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw IntegrityError("malformed graph bundle " + dir.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw IntegrityError("malformed graph bundle " + dir.string() + ": " + e.what());
  }
  auto env = num::load_net(dir / "env_encoder");
  auto task = num::load_net(dir / "task_encoder");
  m.env_encoder = {env.spec, std::move(env.weights)};
  m.task_encoder = {task.spec, std::move(task.weights)};
  if (m.env_encoder.spec.input_dim != 2 || m.env_encoder.spec.output_dim != m.dim() ||
      m.task_encoder.spec.input_dim != 5 || m.task_encoder.spec.output_dim != m.dim()) {
    throw IntegrityError("encoder shapes disagree with graph.meta");
  }
  m.skill_embeddings.resize(m.dim(), m.skill_count());
  m.relation_normals.resize(m.dim(), 2);
  m.relation_translations.resize(m.dim(), 2);
  read_matrix(dir / "embeddings.bin", {&m.skill_embeddings});
  read_matrix(dir / "relations.bin", {&m.relation_normals, &m.relation_translations});
  return m;
}

int register_skill(GraphModel& m, const SkillEntry& entry) {
  if (m.skill_index(entry.name) >= 0) throw InvalidInput("skill '" + entry.name + "' is already in the graph");
  entry.task.validate();
  std::mt19937_64 rng(m.settings.seed + static_cast<std::uint64_t>(m.skill_count()) * 7919);
  const num::Matrix col = num::orthogonal_matrix(m.dim(), 1, rng);
  m.skill_embeddings.conservativeResize(Eigen::NoChange, m.skill_count() + 1);
  m.skill_embeddings.col(m.skill_count()) = m.settings.init_scale * col.col(0);
  m.skills.push_back(entry);
  m.trained = false;
  return m.skill_count() - 1;
}

}  // namespace sgswarm::graph
