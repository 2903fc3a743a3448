#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sgswarm/json_util.hpp"
#include "sgswarm/swarmsim/features.hpp"

namespace sgswarm::cli {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  std::string config;
  bool allow_finetune = false;
  int threads = 1;

  std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }
};

/// Record of one command invocation, written to <out>/manifest.json when the
/// command finishes. The input hash covers the bytes of every input file.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv, std::filesystem::path out_dir);

  void add_config(const std::filesystem::path& path);
  /// Files, or every file below a directory.
  void add_input(const std::filesystem::path& path);
  void add_seed(std::uint64_t seed) { seeds_.push_back(seed); }
  void add_output(const std::filesystem::path& path);

  std::string input_hash() const;
  /// Atomic write; also lists every output file with its sha256.
  void write() const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::filesystem::path out_dir_;
  std::vector<std::string> configs_;
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::uint64_t> seeds_;
  std::vector<std::filesystem::path> outputs_;
  std::chrono::system_clock::time_point start_;
};

/// "1,6" -> environment feature; ConfigError spelling out the expected arity.
sim::EnvFeature parse_env(const std::string& text, const std::string& option = "--env");
/// 4 numbers -> flocking, 5 -> adversarial.
sim::TaskFeature parse_task(const std::string& text, const std::string& option = "--task");

std::string format_values(const std::vector<double>& v);

/// Reads the --config file, or returns an empty object when none was given.
Json load_config(const GlobalOptions& g);

}  // namespace sgswarm::cli
