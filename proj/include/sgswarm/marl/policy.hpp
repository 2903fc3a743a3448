#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>

#include "sgswarm/marl/replay_buffer.hpp"
#include "sgswarm/numcore/mlp.hpp"
#include "sgswarm/numcore/optimizer.hpp"
#include "sgswarm/swarmsim/features.hpp"

namespace sgswarm::marl {

/// Shared actor and local critic for one homogeneous team. The critic sees a
/// single robot's observation and action, never the joint state.
struct PolicyBundle {
  sim::TaskKind kind = sim::TaskKind::kFlocking;
  num::Net actor;   // obs -> 2, tanh output
  num::Net critic;  // obs + 2 -> 1
  num::Net actor_target;
  num::Net critic_target;
  num::OptimizerState actor_opt;
  num::OptimizerState critic_opt;

  static PolicyBundle make(sim::TaskKind kind, int obs_dim, int hidden_size, int hidden_layers,
                           double actor_lr, double critic_lr, std::uint64_t seed);
  int observation_dim() const { return actor.spec.input_dim; }
  /// Throws InvalidInput when shapes are inconsistent.
  void check() const;
  /// Fresh Adam moments with the current shapes and the given rates.
  void reset_optimizers(double actor_lr, double critic_lr);
};

struct NoiseState {
  std::mt19937_64 rng;
  double sigma = 0.0;
};

/// mu(o) when `explore` is false; otherwise mu(o) plus N(0, sigma^2) per
/// component, clipped to [-1, 1].
sim::Vec2 act(const PolicyBundle& bundle, std::span<const double> obs, bool explore,
              NoiseState* noise);

struct UpdateSettings {
  double gamma = 0.99;
  double tau = 0.01;
  std::size_t batch = 512;
};

struct TrainLosses {
  double critic = 0.0;
  double actor = 0.0;
};

/// One critic regression step, one actor ascent step, then soft target
/// updates. Returns nullopt (and changes nothing) when the buffer holds fewer
/// than `batch` transitions. Throws DivergenceError on a non-finite loss.
std::optional<TrainLosses> train_step(PolicyBundle& bundle, ReplayBuffer& buffer,
                                      const UpdateSettings& settings);
/// Same update on an explicit batch.
TrainLosses train_on_batch(PolicyBundle& bundle, const Batch& batch, const UpdateSettings& settings);

/// theta' <- tau * theta + (1 - tau) * theta'.
void soft_update(num::NetWeights& target, const num::NetWeights& online, double tau);

/// Critic input [obs; action] with samples as columns.
num::Matrix critic_input(const num::Matrix& obs, const num::Matrix& action);

/// Gradient of -mean_b Q(o_b, mu(o_b)) with respect to the actor parameters.
/// `loss` receives the objective value.
num::NetWeights actor_loss_gradient(const PolicyBundle& bundle, const num::Matrix& obs,
                                    double* loss = nullptr);

}  // namespace sgswarm::marl
