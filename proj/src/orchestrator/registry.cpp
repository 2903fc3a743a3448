#include "sgswarm/orchestrator/registry.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>
#include <set>

#include <spdlog/spdlog.h>

#include "sgswarm/error.hpp"
#include "sgswarm/json_util.hpp"
#include "sgswarm/swarmsim/config_io.hpp"

namespace sgswarm::orch {

namespace fs = std::filesystem;

namespace {

constexpr int kRegistryFormatVersion = 1;
constexpr const char* kIndexName = "registry.json";

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256: digest init failed");
    }
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("sha256: update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) {
      throw std::runtime_error("sha256: final failed");
    }
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += kDigits[md[i] >> 4];
      out += kDigits[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::map<std::string, std::string> hash_directory(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) out[e.path().filename().string()] = sha256_file(e.path());
  }
  return out;
}

Json entry_to_json(const RegistryEntry& e) {
  Json files = Json::object();
  for (const auto& [k, v] : e.files) files[k] = v;
  return {{"id", e.id},
          {"name", e.name},
          {"dir", e.dir},
          {"env", e.env.values()},
          {"task", e.task.values()},
          {"provenance", to_string(e.provenance)},
          {"parent", e.parent},
          {"files", files}};
}

RegistryEntry entry_from_json(const Json& j, const std::string& path) {
  RegistryEntry e;
  e.id = json_get<int>(j, "id", path);
  e.name = json_get<std::string>(j, "name", path);
  e.dir = json_get<std::string>(j, "dir", path);
  e.env = sim::env_feature_from_json(j.at("env"), path + ".env");
  e.task = sim::task_feature_from_json(j.at("task"), path + ".task");
  e.provenance = provenance_from_string(json_get<std::string>(j, "provenance", path));
  e.parent = json_get_or<std::string>(j, "parent", "", path);
  const Json files = json_get<Json>(j, "files", path);
  if (!files.is_object()) throw ConfigError(path + ".files", "expected an object");
  for (const auto& [k, v] : files.items()) e.files[k] = v.get<std::string>();
  return e;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string to_string(Provenance p) { return p == Provenance::kTrained ? "trained" : "fine-tuned"; }

Provenance provenance_from_string(const std::string& s) {
  if (s == "trained") return Provenance::kTrained;
  if (s == "fine-tuned") return Provenance::kFineTuned;
  throw InvalidInput("unknown provenance '" + s + "' (expected trained or fine-tuned)");
}

SkillRegistry SkillRegistry::create(const fs::path& root) {
  if (fs::exists(root / kIndexName)) return open(root);
  fs::create_directories(root / "skills");
  SkillRegistry reg(root);
  reg.save_index();
  return reg;
}

SkillRegistry SkillRegistry::open(const fs::path& root) {
  const Json j = read_json_file(root / kIndexName);
  const int version = json_get<int>(j, "format", "registry");
  if (version != kRegistryFormatVersion) {
    throw ConfigError("registry.format", "unsupported version " + std::to_string(version));
  }
  SkillRegistry reg(root);
  reg.next_id_ = json_get<int>(j, "next_id", "registry");
  const Json skills = json_get<Json>(j, "skills", "registry");
  if (!skills.is_array()) throw ConfigError("registry.skills", "expected an array");
  for (std::size_t i = 0; i < skills.size(); ++i) {
    auto e = entry_from_json(skills[i], "registry.skills[" + std::to_string(i) + "]");
    if (reg.contains(e.name)) throw ConfigError("registry.skills", "duplicate skill " + e.name);
    for (const auto& [file, hash] : e.files) {
      if (!fs::exists(root / e.dir / file)) {
        throw IntegrityError("skill " + e.name + ": missing file " + (fs::path(e.dir) / file).string());
      }
    }
    reg.entries_.push_back(std::move(e));
  }
  return reg;
}

bool SkillRegistry::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.name == name; });
}

const RegistryEntry& SkillRegistry::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e;
  }
  throw InvalidInput("skill '" + name + "' is not in the registry at " + root_.string());
}

const RegistryEntry& SkillRegistry::add(const marl::SkillRecord& record) {
  if (record.name.empty() || record.name.find_first_of("/\\") != std::string::npos ||
      record.name == "." || record.name == "..") {
    throw InvalidInput("invalid skill name '" + record.name + "'");
  }
  if (contains(record.name)) throw InvalidInput("skill '" + record.name + "' is already registered");
  if (!record.parent.empty() && !contains(record.parent)) {
    throw InvalidInput("parent skill '" + record.parent + "' of '" + record.name + "' is not registered");
  }
  RegistryEntry e;
  e.id = next_id_++;
  e.name = record.name;
  e.dir = (fs::path("skills") / record.name).string();
  e.env = record.env;
  e.task = record.task;
  e.provenance = record.parent.empty() ? Provenance::kTrained : Provenance::kFineTuned;
  e.parent = record.parent;
  const fs::path dir = root_ / e.dir;
  if (fs::exists(dir)) fs::remove_all(dir);
  marl::save_skill(record, dir);
  e.files = hash_directory(dir);
  entries_.push_back(std::move(e));
  save_index();
  spdlog::info("registry: added {} (id {})", record.name, entries_.back().id);
  return entries_.back();
}

const RegistryEntry& SkillRegistry::add_directory(const fs::path& skill_dir) {
  return add(marl::load_skill(skill_dir));
}

void SkillRegistry::verify(const std::string& name) const {
  const auto& e = find(name);
  const fs::path dir = root_ / e.dir;
  for (const auto& [file, hash] : e.files) {
    const fs::path p = dir / file;
    if (!fs::exists(p)) throw IntegrityError("skill " + e.name + ": missing file " + file);
    if (sha256_file(p) != hash) throw IntegrityError("skill " + e.name + ": hash mismatch in " + file);
  }
}

void SkillRegistry::verify() const {
  for (const auto& e : entries_) verify(e.name);
}

marl::SkillRecord SkillRegistry::load(const std::string& name) const {
  verify(name);
  return marl::load_skill(root_ / find(name).dir);
}

std::vector<fs::path> SkillRegistry::gc(bool dry_run) const {
  std::set<fs::path> keep;
  for (const auto& e : entries_) {
    for (const auto& [file, hash] : e.files) keep.insert((root_ / e.dir / file).lexically_normal());
  }
  std::vector<fs::path> garbage;
  const fs::path skills = root_ / "skills";
  if (!fs::exists(skills)) return garbage;
  for (const auto& f : fs::recursive_directory_iterator(skills)) {
    if (f.is_regular_file() && !keep.contains(f.path().lexically_normal())) garbage.push_back(f.path());
  }
  std::sort(garbage.begin(), garbage.end());
  if (!dry_run) {
    for (const auto& p : garbage) fs::remove(p);
    // drop directories left empty
    std::vector<fs::path> dirs;
    for (const auto& f : fs::recursive_directory_iterator(skills)) {
      if (f.is_directory()) dirs.push_back(f.path());
    }
    std::sort(dirs.rbegin(), dirs.rend());
    for (const auto& d : dirs) {
      if (fs::is_empty(d)) fs::remove(d);
    }
  }
  return garbage;
}

std::vector<std::string> SkillRegistry::lineage(const std::string& name) const {
  std::vector<std::string> chain;
  std::string cur = name;
  while (!cur.empty()) {
    if (std::find(chain.begin(), chain.end(), cur) != chain.end()) {
      throw IntegrityError("provenance cycle through skill " + cur);
    }
    chain.push_back(cur);
    cur = find(cur).parent;
  }
  return chain;
}

std::vector<graph::SkillEntry> SkillRegistry::skill_entries() const {
  std::vector<graph::SkillEntry> out;
  for (const auto& e : entries_) out.push_back({e.name, e.env, e.task, (root_ / e.dir).string()});
  return out;
}

void SkillRegistry::save_index() const {
  Json skills = Json::array();
  for (const auto& e : entries_) skills.push_back(entry_to_json(e));
  const Json j = {{"format", kRegistryFormatVersion}, {"next_id", next_id_}, {"skills", skills}};
  write_file_atomic(root_ / kIndexName, j.dump(2) + "\n");
}

}  // namespace sgswarm::orch
