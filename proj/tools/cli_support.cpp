#include "cli_support.hpp"

#include <algorithm>
#include <ctime>

#include <fmt/format.h>

#include "sgswarm/error.hpp"
#include "sgswarm/orchestrator/registry.hpp"

#ifndef SGSWARM_VERSION
#define SGSWARM_VERSION "dev"
#endif

namespace sgswarm::cli {

namespace fs = std::filesystem;

namespace {

std::string iso_utc(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<fs::path> files_below(const fs::path& p) {
  std::vector<fs::path> out;
  if (fs::is_directory(p)) {
    for (const auto& e : fs::recursive_directory_iterator(p)) {
      if (e.is_regular_file()) out.push_back(e.path());
    }
  } else if (fs::exists(p)) {
    out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

RunManifest::RunManifest(std::string command, std::vector<std::string> argv, fs::path out_dir)
    : command_(std::move(command)), argv_(std::move(argv)), out_dir_(std::move(out_dir)),
      start_(std::chrono::system_clock::now()) {}

void RunManifest::add_config(const fs::path& path) {
  configs_.push_back(path.string());
  add_input(path);
}

void RunManifest::add_input(const fs::path& path) {
  for (auto& f : files_below(path)) inputs_.push_back(std::move(f));
}

void RunManifest::add_output(const fs::path& path) {
  for (auto& f : files_below(path)) outputs_.push_back(std::move(f));
}

std::string RunManifest::input_hash() const {
  auto inputs = inputs_;
  std::sort(inputs.begin(), inputs.end());
  inputs.erase(std::unique(inputs.begin(), inputs.end()), inputs.end());
  std::string text;
  for (const auto& f : inputs) text += orch::sha256_file(f) + "  " + f.filename().string() + "\n";
  return orch::sha256_hex(text);
}

void RunManifest::write() const {
  Json outputs = Json::array();
  auto files = outputs_;
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  for (const auto& f : files) {
    outputs.push_back({{"path", fs::relative(f, out_dir_).string()}, {"sha256", orch::sha256_file(f)}});
  }
  const Json j = {{"command", command_},
                  {"argv", argv_},
                  {"configs", configs_},
                  {"seeds", seeds_},
                  {"tool_version", SGSWARM_VERSION},
                  {"output_dir", out_dir_.string()},
                  {"started", iso_utc(start_)},
                  {"finished", iso_utc(std::chrono::system_clock::now())},
                  {"input_hash", input_hash()},
                  {"outputs", outputs}};
  write_file_atomic(out_dir_ / "manifest.json", j.dump(2) + "\n");
}

sim::EnvFeature parse_env(const std::string& text, const std::string& option) {
  try {
    const auto v = sim::parse_feature_list(text);
    if (v.size() != 2) {
      throw InvalidInput("expected 2 values (y,L), got " + std::to_string(v.size()));
    }
    return sim::EnvFeature::from_values(v);
  } catch (const InvalidInput& e) {
    throw ConfigError(option, "'" + text + "': " + e.what());
  }
}

sim::TaskFeature parse_task(const std::string& text, const std::string& option) {
  try {
    const auto v = sim::parse_feature_list(text);
    if (v.size() != 4 && v.size() != 5) {
      throw InvalidInput("expected 4 values for flocking (v_max,v_min,d_ref,r_perc) or 5 for adversarial "
                         "(v_max,v_min,delta_h,n_o,r_atta), got " + std::to_string(v.size()));
    }
    return sim::TaskFeature::from_values(v);
  } catch (const InvalidInput& e) {
    throw ConfigError(option, "'" + text + "': " + e.what());
  }
}

std::string format_values(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + fmt::format("{:g}", v[k]);
  return s;
}

Json load_config(const GlobalOptions& g) {
  if (g.config.empty()) return Json::object();
  return read_json_file(g.config);
}

}  // namespace sgswarm::cli
