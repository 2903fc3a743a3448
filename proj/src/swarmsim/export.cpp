#include "sgswarm/swarmsim/export.hpp"

#include <cmath>
#include <limits>

#include "sgswarm/json_util.hpp"

namespace sgswarm::sim {

TrajectoryWriter::TrajectoryWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot write trajectory " + path.string());
}

void TrajectoryWriter::write(const World& world) { write(world, StepEvents{}); }

void TrajectoryWriter::write(const World& world, const StepEvents& events) {
  Json agents = Json::array();
  for (const auto& a : world.agents()) {
    agents.push_back({{"id", a.id},
                      {"team", to_string(a.team)},
                      {"p", {a.p.x, a.p.y}},
                      {"v", {a.v.x, a.v.y}},
                      {"hp", a.hp},
                      {"alive", a.alive}});
  }
  Json ev = Json::array();
  for (const auto& k : events.kills) ev.push_back({{"kill", k.victim}, {"attackers", k.attackers}});
  Json record = {{"tick", world.tick()}, {"agents", agents}, {"events", ev}};
  out_ << record.dump() << '\n';
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpisodeMetrics>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics " + path.string());
  out << "episode,green_reward,red_reward,green_kills,red_kills,mean_neighbor_distance\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.episode << ',' << r.green_reward << ',' << r.red_reward << ',' << r.green_kills << ','
        << r.red_kills << ',' << r.mean_neighbor_distance << '\n';
  }
}

double mean_nearest_neighbor_distance(const World& world, Team team) {
  const auto& agents = world.agents();
  double sum = 0.0;
  int n = 0;
  for (const auto& a : agents) {
    if (!a.alive || a.team != team) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : agents) {
      if (!b.alive || b.team != team || b.id == a.id) continue;
      best = std::min(best, world.displacement(a.p, b.p).norm());
    }
    if (std::isfinite(best)) {
      sum += best;
      ++n;
    }
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace sgswarm::sim
