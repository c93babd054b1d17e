#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "policylab/followers/trainers.hpp"

namespace policylab {

void compute_gae(PpoBatch& batch, double gamma, double lambda) {
  const std::size_t n = batch.samples.size();
  batch.advantages.assign(n, 0.0);
  batch.returns.assign(n, 0.0);
  double adv = 0.0;
  for (std::size_t idx = n; idx-- > 0;) {
    const PpoSample& s = batch.samples[idx];
    const double next_value =
        (s.done || idx + 1 == n) ? 0.0 : batch.samples[idx + 1].value_old;
    const double next_nonterminal = s.done ? 0.0 : 1.0;
    if (s.done) adv = 0.0;
    const double delta = s.reward + gamma * next_value * next_nonterminal - s.value_old;
    adv = delta + gamma * lambda * next_nonterminal * adv;
    batch.advantages[idx] = adv;
    batch.returns[idx] = adv + s.value_old;
  }
}

namespace {

struct NormStats {
  double mean = 0.0;
  double stdev = 1.0;
};

NormStats advantage_stats(const std::vector<double>& adv, bool enabled) {
  NormStats st;
  if (!enabled || adv.empty()) return st;
  st.mean = std::accumulate(adv.begin(), adv.end(), 0.0) / adv.size();
  double var = 0.0;
  for (double a : adv) var += (a - st.mean) * (a - st.mean);
  st.stdev = std::sqrt(var / adv.size()) + 1e-8;
  return st;
}

struct HeadForward {
  std::vector<double> head_in;
  std::vector<double> probs;
  double value = 0.0;
  MlpTape trunk_tape, actor_tape, critic_tape;

  void run(const GridPolicy& p, std::span<const double> obs) {
    trunk_tape.forward(p.trunk, obs.subspan(0, p.trunk_in));
    auto features = trunk_tape.output();
    head_in.assign(features.begin(), features.end());
    head_in.insert(head_in.end(), obs.begin() + p.trunk_in, obs.end());
    actor_tape.forward(p.actor, head_in);
    probs.resize(p.actor.spec.out_dim());
    softmax(actor_tape.output(), probs);
    critic_tape.forward(p.critic, head_in);
    value = critic_tape.output()[0];
  }
};

// Gradient contribution of one sample; scale divides into the batch mean.
void sample_backward(const GridPolicy& p, HeadForward& fwd, const PpoSample& s, double adv,
                     double ret, const TrainerConfig& cfg, double scale,
                     std::span<double> trunk_grad, std::span<double> actor_grad,
                     std::span<double> critic_grad, bool want_trunk) {
  const int n_act = static_cast<int>(fwd.probs.size());
  const double logprob_new = std::log(std::max(fwd.probs[s.action], 1e-300));
  const double ratio = std::exp(logprob_new - s.logprob_old);
  const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
  const double pg1 = -adv * ratio;
  const double pg2 = -adv * clipped;

  // d(policy surrogate)/d(logits)
  std::vector<double> dlogits(n_act, 0.0);
  double dratio;
  if (pg1 >= pg2) {
    dratio = -adv;
  } else {
    const bool saturated = ratio < 1.0 - cfg.clip || ratio > 1.0 + cfg.clip;
    dratio = saturated ? 0.0 : -adv;
  }
  if (dratio != 0.0) {
    const double coef = dratio * ratio;  // d ratio/d logprob_new = ratio
    for (int k = 0; k < n_act; ++k) {
      dlogits[k] = coef * ((k == s.action ? 1.0 : 0.0) - fwd.probs[k]);
    }
  }
  // entropy bonus: loss has -c_H * H
  if (cfg.entropy_coef != 0.0) {
    const double h = categorical_entropy(fwd.probs);
    for (int k = 0; k < n_act; ++k) {
      if (fwd.probs[k] > 0.0) {
        dlogits[k] += cfg.entropy_coef * fwd.probs[k] * (std::log(fwd.probs[k]) + h);
      }
    }
  }
  for (double& g : dlogits) g *= scale;

  // value loss: 0.5 * max(unclipped, clipped) * value_coef
  const double vdiff = fwd.value - ret;
  double dvalue;
  if (cfg.value_clip > 0.0) {
    const double vclipped =
        s.value_old + std::clamp(fwd.value - s.value_old, -cfg.value_clip, cfg.value_clip);
    const double vl1 = vdiff * vdiff;
    const double vl2 = (vclipped - ret) * (vclipped - ret);
    if (vl1 >= vl2) {
      dvalue = vdiff;
    } else {
      const bool saturated = std::abs(fwd.value - s.value_old) > cfg.value_clip;
      dvalue = saturated ? 0.0 : (vclipped - ret);
    }
  } else {
    dvalue = vdiff;
  }
  dvalue *= cfg.value_coef * scale;

  std::vector<double> dhead(fwd.head_in.size(), 0.0);
  fwd.actor_tape.backward(p.actor, dlogits, actor_grad, dhead);
  const std::vector<double> dval{dvalue};
  fwd.critic_tape.backward(p.critic, dval, critic_grad, dhead);
  if (want_trunk) {
    const int feat = p.trunk.spec.out_dim();
    fwd.trunk_tape.backward(p.trunk, std::span<const double>(dhead.data(), feat), trunk_grad);
  }
}

}  // namespace

double ppo_loss(const GridPolicy& policy, const PpoBatch& batch, const TrainerConfig& config) {
  const NormStats st = advantage_stats(batch.advantages, config.normalize_advantages);
  HeadForward fwd;
  double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;
  for (std::size_t i = 0; i < batch.samples.size(); ++i) {
    const PpoSample& s = batch.samples[i];
    const double adv = (batch.advantages[i] - st.mean) / st.stdev;
    fwd.run(policy, s.obs);
    const double logprob_new = std::log(std::max(fwd.probs[s.action], 1e-300));
    const double ratio = std::exp(logprob_new - s.logprob_old);
    const double clipped = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
    policy_loss += std::max(-adv * ratio, -adv * clipped);
    entropy += categorical_entropy(fwd.probs);
    const double ret = batch.returns[i];
    const double vl1 = (fwd.value - ret) * (fwd.value - ret);
    double vl = vl1;
    if (config.value_clip > 0.0) {
      const double vclipped = s.value_old + std::clamp(fwd.value - s.value_old,
                                                       -config.value_clip, config.value_clip);
      vl = std::max(vl1, (vclipped - ret) * (vclipped - ret));
    }
    value_loss += 0.5 * vl;
  }
  const double n = static_cast<double>(batch.samples.size());
  return policy_loss / n + config.value_coef * value_loss / n -
         config.entropy_coef * entropy / n;
}

void ppo_gradient(const GridPolicy& policy, const PpoBatch& batch, const TrainerConfig& config,
                  std::span<double> trunk_grad, std::span<double> actor_grad,
                  std::span<double> critic_grad) {
  const NormStats st = advantage_stats(batch.advantages, config.normalize_advantages);
  HeadForward fwd;
  const double scale = 1.0 / static_cast<double>(batch.samples.size());
  for (std::size_t i = 0; i < batch.samples.size(); ++i) {
    const PpoSample& s = batch.samples[i];
    const double adv = (batch.advantages[i] - st.mean) / st.stdev;
    fwd.run(policy, s.obs);
    sample_backward(policy, fwd, s, adv, batch.returns[i], config, scale, trunk_grad,
                    actor_grad, critic_grad, !trunk_grad.empty());
  }
}

PpoStats ppo_update(GridPolicy& policy, Adam& trunk_opt, Adam& actor_opt, Adam& critic_opt,
                    PpoBatch& batch, const TrainerConfig& config, Rng& rng, bool train_trunk) {
  if (batch.samples.empty()) return {};
  if (batch.advantages.size() != batch.samples.size()) {
    compute_gae(batch, config.gamma, config.gae_lambda);
  }
  const NormStats st = advantage_stats(batch.advantages, config.normalize_advantages);

  std::vector<std::size_t> order(batch.samples.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> trunk_grad(policy.trunk.params.size());
  std::vector<double> actor_grad(policy.actor.params.size());
  std::vector<double> critic_grad(policy.critic.params.size());
  HeadForward fwd;
  PpoStats stats;

  for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.minibatch)) {
      const std::size_t stop = std::min(order.size(), start + config.minibatch);
      std::fill(trunk_grad.begin(), trunk_grad.end(), 0.0);
      std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
      std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        const PpoSample& s = batch.samples[i];
        const double adv = (batch.advantages[i] - st.mean) / st.stdev;
        fwd.run(policy, s.obs);
        sample_backward(policy, fwd, s, adv, batch.returns[i], config, scale,
                        trunk_grad, actor_grad, critic_grad, train_trunk);
      }
      if (config.grad_clip > 0.0) {
        double sq = 0.0;
        for (double g : trunk_grad) sq += g * g;
        for (double g : actor_grad) sq += g * g;
        for (double g : critic_grad) sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > config.grad_clip) {
          const double sc = config.grad_clip / norm;
          for (double& g : trunk_grad) g *= sc;
          for (double& g : actor_grad) g *= sc;
          for (double& g : critic_grad) g *= sc;
        }
      }
      for (double g : actor_grad) {
        if (!std::isfinite(g)) throw std::runtime_error("NaN in PPO update");
      }
      if (train_trunk) trunk_opt.step(policy.trunk.params, trunk_grad);
      actor_opt.step(policy.actor.params, actor_grad);
      critic_opt.step(policy.critic.params, critic_grad);
    }
  }

  // Post-update diagnostics on the full batch.
  for (std::size_t i = 0; i < batch.samples.size(); ++i) {
    fwd.run(policy, batch.samples[i].obs);
    stats.entropy += categorical_entropy(fwd.probs);
    const double vdiff = fwd.value - batch.returns[i];
    stats.value_loss += 0.5 * vdiff * vdiff;
  }
  stats.entropy /= static_cast<double>(batch.samples.size());
  stats.value_loss /= static_cast<double>(batch.samples.size());
  return stats;
}

}  // namespace policylab
