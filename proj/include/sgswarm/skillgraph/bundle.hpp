#pragma once

#include <filesystem>

#include "sgswarm/skillgraph/model.hpp"

namespace sgswarm::graph {

inline constexpr int kGraphFormatVersion = 1;

/// Directory with env_encoder.net*, task_encoder.net*, skills.index,
/// embeddings.bin, relations.bin and graph.meta.
void save_graph(const GraphModel& model, const std::filesystem::path& dir);
/// Throws IntegrityError on a missing file, version or size mismatch.
GraphModel load_graph(const std::filesystem::path& dir);

/// Appends a skill with a fresh random embedding and clears the trained flag;
/// the graph must be retrained before its scores mean anything.
int register_skill(GraphModel& model, const SkillEntry& entry);

}  // namespace sgswarm::graph
