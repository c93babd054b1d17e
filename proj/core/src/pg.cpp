#include <cmath>
#include <stdexcept>

#include "policylab/followers/trainers.hpp"

namespace policylab {

void TrainerConfig::validate() const {
  if (lr <= 0 || gamma <= 0 || gamma >= 1 || gae_lambda <= 0 || gae_lambda > 1 ||
      clip <= 0 || value_coef < 0 || entropy_coef < 0 || minibatch < 1 ||
      update_epochs < 1 || adam_eps <= 0 || pg_batch_episodes < 1) {
    throw std::invalid_argument("invalid trainer configuration");
  }
}

TrainerConfig TrainerConfig::harvest_defaults() {
  TrainerConfig c;
  c.lr = 3e-4;
  c.gamma = 0.998;
  c.entropy_coef = 0.025;
  return c;
}

TrainerConfig TrainerConfig::cleanup_defaults() { return harvest_defaults(); }

TrainerConfig TrainerConfig::cer_defaults() {
  TrainerConfig c;
  c.lr = 1e-3;
  c.gamma = 0.99;
  c.entropy_coef = 0.166;
  c.grad_clip = 0.0;
  c.pg_batch_episodes = 1;
  return c;
}

namespace {

// Per-step logit gradient of -log pi(a) * coef - c_H * H(pi).
void logit_gradient(std::span<const double> probs, int action, double coef, double entropy_coef,
                    std::span<double> out) {
  const double h = categorical_entropy(probs);
  for (std::size_t k = 0; k < probs.size(); ++k) {
    double g = coef * (probs[k] - (static_cast<int>(k) == action ? 1.0 : 0.0));
    if (entropy_coef != 0.0 && probs[k] > 0.0) {
      g += entropy_coef * probs[k] * (std::log(probs[k]) + h);
    }
    out[k] = g;
  }
}

}  // namespace

double pg_loss(const Mlp& policy, std::span<const Trajectory> batch,
               const TrainerConfig& config) {
  MlpTape tape;
  std::vector<double> probs(policy.spec.out_dim());
  double loss = 0.0;
  for (const auto& traj : batch) {
    double ret = 0.0;
    std::vector<double> rtg(traj.rewards.size());
    for (int t = static_cast<int>(traj.rewards.size()) - 1; t >= 0; --t) {
      ret = traj.rewards[t] + config.gamma * ret;
      rtg[t] = ret;
    }
    for (std::size_t t = 0; t < traj.obs.size(); ++t) {
      tape.forward(policy, traj.obs[t]);
      softmax(tape.output(), probs);
      loss += -std::log(std::max(probs[traj.actions[t]], 1e-300)) * rtg[t] -
              config.entropy_coef * categorical_entropy(probs);
    }
  }
  return loss / static_cast<double>(batch.size());
}

void pg_gradient(const Mlp& policy, std::span<const Trajectory> batch,
                 const TrainerConfig& config, std::span<double> grad) {
  MlpTape tape;
  std::vector<double> probs(policy.spec.out_dim());
  std::vector<double> dlogits(policy.spec.out_dim());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& traj : batch) {
    double ret = 0.0;
    std::vector<double> rtg(traj.rewards.size());
    for (int t = static_cast<int>(traj.rewards.size()) - 1; t >= 0; --t) {
      ret = traj.rewards[t] + config.gamma * ret;
      rtg[t] = ret;
    }
    for (std::size_t t = 0; t < traj.obs.size(); ++t) {
      tape.forward(policy, traj.obs[t]);
      softmax(tape.output(), probs);
      logit_gradient(probs, traj.actions[t], rtg[t], config.entropy_coef, dlogits);
      for (double& g : dlogits) g *= inv_b;
      tape.backward(policy, dlogits, grad);
    }
  }
}

void pg_update(Mlp& policy, Adam& opt, std::span<const Trajectory> batch,
               const TrainerConfig& config) {
  if (batch.empty()) return;
  std::vector<double> grad(policy.params.size(), 0.0);
  pg_gradient(policy, batch, config, grad);
  for (double g : grad) {
    if (!std::isfinite(g)) throw std::runtime_error("NaN in policy-gradient update");
  }
  clip_grad_norm(grad, config.grad_clip);
  opt.step(policy.params, grad);
}

}  // namespace policylab
