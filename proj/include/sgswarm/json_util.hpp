#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sgswarm/error.hpp"

namespace sgswarm {

using Json = nlohmann::json;

/// Reads and parses a JSON file; failures become ConfigError naming the file.
Json read_json_file(const std::filesystem::path& path);

/// Writes `text` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

/// Typed lookup with a dotted key path in error messages.
template <class T>
T json_get(const Json& obj, const std::string& key, const std::string& path) {
  const std::string where = path.empty() ? key : path + "." + key;
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError(where, "missing required key");
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(where, std::string("wrong type: ") + e.what());
  }
}

template <class T>
T json_get_or(const Json& obj, const std::string& key, T fallback, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return json_get<T>(obj, key, path);
}

}  // namespace sgswarm
