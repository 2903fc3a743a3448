#include "sgswarm/marl/replay_buffer.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

#include "sgswarm/error.hpp"

namespace sgswarm::marl {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, std::uint64_t seed)
    : capacity_(capacity), obs_dim_(obs_dim), rng_(seed) {
  if (capacity == 0) throw InvalidInput("replay buffer capacity must be positive");
  if (obs_dim < 1) throw InvalidInput("replay buffer observation size must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  push(t.obs, t.action, t.reward, t.next_obs, t.done);
}

void ReplayBuffer::push(std::span<const double> obs, sim::Vec2 action, double reward,
                        std::span<const double> next_obs, bool done) {
  const auto d = static_cast<std::size_t>(obs_dim_);
  if (obs.size() != d || next_obs.size() != d) {
    throw InvalidInput("transition observation has length " + std::to_string(obs.size()) + "/" +
                       std::to_string(next_obs.size()) + ", buffer expects " + std::to_string(d));
  }
  const std::size_t slot = next_;
  if (slot == reward_.size()) {
    obs_.resize(obs_.size() + d);
    next_obs_.resize(next_obs_.size() + d);
    action_.resize(action_.size() + 2);
    reward_.push_back(0.0f);
    done_.push_back(0);
  }
  std::transform(obs.begin(), obs.end(), obs_.begin() + static_cast<long>(slot * d),
                 [](double x) { return static_cast<float>(x); });
  std::transform(next_obs.begin(), next_obs.end(), next_obs_.begin() + static_cast<long>(slot * d),
                 [](double x) { return static_cast<float>(x); });
  action_[2 * slot] = static_cast<float>(action.x);
  action_[2 * slot + 1] = static_cast<float>(action.y);
  reward_[slot] = static_cast<float>(reward);
  done_[slot] = done ? 1 : 0;
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Transition ReplayBuffer::at(std::size_t index) const {
  if (index >= size_) throw InvalidInput("replay index out of range");
  const auto d = static_cast<std::size_t>(obs_dim_);
  Transition t;
  t.obs.assign(obs_.begin() + static_cast<long>(index * d),
               obs_.begin() + static_cast<long>((index + 1) * d));
  t.next_obs.assign(next_obs_.begin() + static_cast<long>(index * d),
                    next_obs_.begin() + static_cast<long>((index + 1) * d));
  t.action = {action_[2 * index], action_[2 * index + 1]};
  t.reward = reward_[index];
  t.done = done_[index] != 0;
  return t;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n) {
  if (n > size_) throw InvalidInput("cannot sample more transitions than stored");
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(n * 2);
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t j = size_ - n; j < size_; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const std::size_t t = pick(rng_);
    const std::size_t v = chosen.contains(t) ? j : t;
    chosen.insert(v);
    out.push_back(v);
  }
  return out;
}

Batch ReplayBuffer::sample(std::size_t n) {
  const auto idx = sample_indices(n);
  return gather(idx);
}

Batch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  const auto d = static_cast<std::size_t>(obs_dim_);
  Batch b;
  b.obs.resize(obs_dim_, n);
  b.next_obs.resize(obs_dim_, n);
  b.action.resize(2, n);
  b.reward.resize(n);
  b.done.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const std::size_t i = indices[static_cast<std::size_t>(c)];
    if (i >= size_) throw InvalidInput("replay index out of range");
    for (std::size_t k = 0; k < d; ++k) {
      b.obs(static_cast<Eigen::Index>(k), c) = obs_[i * d + k];
      b.next_obs(static_cast<Eigen::Index>(k), c) = next_obs_[i * d + k];
    }
    b.action(0, c) = action_[2 * i];
    b.action(1, c) = action_[2 * i + 1];
    b.reward(c) = reward_[i];
    b.done(c) = done_[i] ? 1.0 : 0.0;
  }
  return b;
}

}  // namespace sgswarm::marl
