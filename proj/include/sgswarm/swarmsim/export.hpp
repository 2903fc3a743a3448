#pragma once

#include <filesystem>
#include <fstream>
#include <vector>

#include "sgswarm/swarmsim/world.hpp"

namespace sgswarm::sim {

/// One JSON object per line: tick, per-agent (id, team, p, v, hp, alive), events.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(const std::filesystem::path& path);
  void write(const World& world, const StepEvents& events);
  void write(const World& world);

 private:
  std::ofstream out_;
};

struct EpisodeMetrics {
  int episode = 0;
  double green_reward = 0.0;
  double red_reward = 0.0;
  int green_kills = 0;
  int red_kills = 0;
  double mean_neighbor_distance = 0.0;
};

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpisodeMetrics>& rows);

/// Mean over living robots of `team` of the distance to the nearest living
/// teammate. NaN with fewer than two living robots.
double mean_nearest_neighbor_distance(const World& world, Team team);

}  // namespace sgswarm::sim
