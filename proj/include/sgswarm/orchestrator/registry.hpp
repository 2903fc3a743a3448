#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sgswarm/marl/skill.hpp"
#include "sgswarm/skillgraph/samples.hpp"

namespace sgswarm::orch {

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

enum class Provenance { kTrained, kFineTuned };
std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct RegistryEntry {
  int id = 0;
  std::string name;
  std::string dir;  // relative to the registry root
  sim::EnvFeature env;
  sim::TaskFeature task;
  Provenance provenance = Provenance::kTrained;
  std::string parent;
  std::map<std::string, std::string> files;  // file name -> sha256
};

/// Directory of skill folders plus registry.json. Skills are stored under
/// skills/<name>/ and looked up by name; ids are assigned in insertion order.
class SkillRegistry {
 public:
  /// Creates the directory and an empty index if none exists yet.
  static SkillRegistry create(const std::filesystem::path& root);
  /// Throws ConfigError when there is no index, IntegrityError naming the
  /// skill when a referenced file is missing.
  static SkillRegistry open(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  const std::vector<RegistryEntry>& entries() const { return entries_; }
  bool contains(const std::string& name) const;
  const RegistryEntry& find(const std::string& name) const;

  /// Saves the record under skills/<name>/. Provenance is fine-tuned iff the
  /// record names a parent, which must already be registered.
  const RegistryEntry& add(const marl::SkillRecord& record);
  /// Copies an existing skill directory in (loads it first to validate it).
  const RegistryEntry& add_directory(const std::filesystem::path& skill_dir);

  /// Hash-checks the entry's files, then loads the record.
  marl::SkillRecord load(const std::string& name) const;
  /// Throws IntegrityError naming the first skill whose files are missing or changed.
  void verify() const;
  void verify(const std::string& name) const;

  /// Files under skills/ not referenced by any entry. Deleted unless `dry_run`.
  std::vector<std::filesystem::path> gc(bool dry_run = true) const;

  /// [name, parent, grandparent, ...] up to a skill without a parent.
  std::vector<std::string> lineage(const std::string& name) const;

  /// Graph-side view of every entry, record_path set to the skill directory.
  std::vector<graph::SkillEntry> skill_entries() const;

 private:
  explicit SkillRegistry(std::filesystem::path root) : root_(std::move(root)) {}
  void save_index() const;

  std::filesystem::path root_;
  std::vector<RegistryEntry> entries_;
  int next_id_ = 1;
};

}  // namespace sgswarm::orch
