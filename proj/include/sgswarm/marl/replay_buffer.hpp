#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sgswarm/numcore/mlp.hpp"
#include "sgswarm/swarmsim/vec2.hpp"

namespace sgswarm::marl {

struct Transition {
  std::vector<double> obs;
  sim::Vec2 action;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;
};

/// Columns are samples.
struct Batch {
  num::Matrix obs;       // obs_dim x n
  num::Matrix action;    // 2 x n
  num::Vector reward;    // n
  num::Matrix next_obs;  // obs_dim x n
  num::Vector done;      // n, 1.0 for terminal
};

/// Fixed-capacity ring of transitions stored as float32. Storage grows on
/// demand up to the capacity.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, std::uint64_t seed);

  void push(const Transition& t);
  void push(std::span<const double> obs, sim::Vec2 action, double reward,
            std::span<const double> next_obs, bool done);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }
  Transition at(std::size_t index) const;

  /// `n` distinct indices drawn uniformly from [0, size) (Floyd's algorithm).
  std::vector<std::size_t> sample_indices(std::size_t n);
  Batch sample(std::size_t n);
  Batch gather(std::span<const std::size_t> indices) const;

 private:
  std::size_t capacity_;
  int obs_dim_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::vector<float> obs_;
  std::vector<float> next_obs_;
  std::vector<float> action_;  // 2 per transition
  std::vector<float> reward_;
  std::vector<unsigned char> done_;
  std::mt19937_64 rng_;
};

}  // namespace sgswarm::marl
