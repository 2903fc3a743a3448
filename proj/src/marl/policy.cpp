#include "sgswarm/marl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgswarm/error.hpp"
#include "sgswarm/numcore/init.hpp"

namespace sgswarm::marl {

PolicyBundle PolicyBundle::make(sim::TaskKind kind, int obs_dim, int hidden_size, int hidden_layers,
                                double actor_lr, double critic_lr, std::uint64_t seed) {
  PolicyBundle b;
  b.kind = kind;
  b.actor.spec = {obs_dim, hidden_size, hidden_layers, 2, num::OutputActivation::kTanh};
  b.critic.spec = {obs_dim + 2, hidden_size, hidden_layers, 1, num::OutputActivation::kNone};
  b.actor.spec.validate();
  b.critic.spec.validate();
  b.actor.weights = num::init_weights(b.actor.spec, num::InitScheme::kUniformScaled, seed);
  b.critic.weights = num::init_weights(b.critic.spec, num::InitScheme::kUniformScaled, seed + 1);
  b.actor_target = b.actor;
  b.critic_target = b.critic;
  b.reset_optimizers(actor_lr, critic_lr);
  return b;
}

void PolicyBundle::check() const {
  if (actor.spec.output_dim != 2) throw InvalidInput("actor must output 2 values");
  if (critic.spec.input_dim != actor.spec.input_dim + 2) {
    throw InvalidInput("critic input must be observation length + 2");
  }
  actor.weights.check_shapes(actor.spec);
  critic.weights.check_shapes(critic.spec);
  if (!(actor_target.spec == actor.spec) || !(critic_target.spec == critic.spec)) {
    throw InvalidInput("target network shapes differ from online networks");
  }
  actor_target.weights.check_shapes(actor.spec);
  critic_target.weights.check_shapes(critic.spec);
}

void PolicyBundle::reset_optimizers(double actor_lr, double critic_lr) {
  actor_opt = num::OptimizerState::make(num::OptimizerKind::kAdam, actor_lr, actor.weights);
  critic_opt = num::OptimizerState::make(num::OptimizerKind::kAdam, critic_lr, critic.weights);
}

sim::Vec2 act(const PolicyBundle& bundle, std::span<const double> obs, bool explore,
              NoiseState* noise) {
  if (static_cast<int>(obs.size()) != bundle.observation_dim()) {
    throw InvalidInput("observation has length " + std::to_string(obs.size()) + ", policy expects " +
                       std::to_string(bundle.observation_dim()));
  }
  const num::Vector x = Eigen::Map<const num::Vector>(obs.data(), static_cast<Eigen::Index>(obs.size()));
  const num::Vector out = bundle.actor(x);
  sim::Vec2 a{out(0), out(1)};
  if (explore) {
    if (noise == nullptr) throw InvalidInput("exploration requested without a noise state");
    std::normal_distribution<double> n(0.0, 1.0);
    a.x += noise->sigma * n(noise->rng);
    a.y += noise->sigma * n(noise->rng);
  }
  return {std::clamp(a.x, -1.0, 1.0), std::clamp(a.y, -1.0, 1.0)};
}

void soft_update(num::NetWeights& target, const num::NetWeights& online, double tau) {
  for (std::size_t k = 0; k < target.layers.size(); ++k) {
    auto& t = target.layers[k];
    const auto& o = online.layers[k];
    t.weight = tau * o.weight + (1.0 - tau) * t.weight;
    t.bias = tau * o.bias + (1.0 - tau) * t.bias;
  }
}

num::Matrix critic_input(const num::Matrix& obs, const num::Matrix& action) {
  num::Matrix x(obs.rows() + 2, obs.cols());
  x.topRows(obs.rows()) = obs;
  x.bottomRows(2) = action;
  return x;
}

num::NetWeights actor_loss_gradient(const PolicyBundle& bundle, const num::Matrix& obs,
                                    double* loss) {
  const auto n = static_cast<double>(obs.cols());
  num::ForwardCache actor_cache;
  const num::Matrix a = bundle.actor.batch(obs, &actor_cache);
  num::ForwardCache critic_cache;
  const num::Matrix q = bundle.critic.batch(critic_input(obs, a), &critic_cache);
  if (loss != nullptr) *loss = -q.mean();
  const num::Matrix dq = num::Matrix::Constant(1, obs.cols(), -1.0 / n);
  const auto cg = num::backward_batch(bundle.critic.spec, bundle.critic.weights, critic_cache, dq);
  const num::Matrix da = cg.input.bottomRows(2);
  return num::backward_batch(bundle.actor.spec, bundle.actor.weights, actor_cache, da).params;
}

TrainLosses train_on_batch(PolicyBundle& bundle, const Batch& batch, const UpdateSettings& s) {
  const auto n = static_cast<double>(batch.obs.cols());
  TrainLosses losses;

  const num::Matrix next_a = bundle.actor_target.batch(batch.next_obs);
  const num::Matrix next_q = bundle.critic_target.batch(critic_input(batch.next_obs, next_a));
  const num::Vector y =
      batch.reward.array() + s.gamma * (1.0 - batch.done.array()) * next_q.row(0).transpose().array();

  num::ForwardCache cache;
  const num::Matrix q = bundle.critic.batch(critic_input(batch.obs, batch.action), &cache);
  const num::Matrix err = q - y.transpose();
  losses.critic = err.squaredNorm() / n;
  const auto cg = num::backward_batch(bundle.critic.spec, bundle.critic.weights, cache, (2.0 / n) * err);
  num::optimizer_step(bundle.critic_opt, bundle.critic.weights, cg.params);

  const auto ag = actor_loss_gradient(bundle, batch.obs, &losses.actor);
  num::optimizer_step(bundle.actor_opt, bundle.actor.weights, ag);

  if (!std::isfinite(losses.critic) || !std::isfinite(losses.actor) ||
      !bundle.actor.weights.all_finite() || !bundle.critic.weights.all_finite()) {
    throw DivergenceError("non-finite loss during policy update (critic " +
                          std::to_string(losses.critic) + ", actor " + std::to_string(losses.actor) +
                          ", adam step " + std::to_string(bundle.critic_opt.step) + ")");
  }

  soft_update(bundle.actor_target.weights, bundle.actor.weights, s.tau);
  soft_update(bundle.critic_target.weights, bundle.critic.weights, s.tau);
  return losses;
}

std::optional<TrainLosses> train_step(PolicyBundle& bundle, ReplayBuffer& buffer,
                                      const UpdateSettings& settings) {
  if (buffer.size() < settings.batch) return std::nullopt;
  return train_on_batch(bundle, buffer.sample(settings.batch), settings);
}

}  // namespace sgswarm::marl
