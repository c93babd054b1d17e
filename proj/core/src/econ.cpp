#include "policylab/neural/econ.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace policylab {

EconConfig EconConfig::for_env(EnvKind kind) {
  EconConfig c;
  switch (kind) {
    case EnvKind::Harvest:
      c.lr = 5e-4;
      c.entropy_coef = 0.2;
      c.grid = GridSpec{0.0, 1.0, 0.05};
      break;
    case EnvKind::Cleanup:
      c.lr = 1e-4;
      c.entropy_coef = 0.2;
      c.grid = GridSpec{0.0, 3.0, 0.15};
      break;
    case EnvKind::Cer:
      c.lr = 5e-4;
      c.entropy_coef = 0.488;
      c.grid = GridSpec{0.0, 5.0, 1.0};
      break;
  }
  return c;
}

EconPrincipalNet EconPrincipalNet::init(int obs_dim, const ActionSpec& spec,
                                        const EconConfig& config, Rng& rng) {
  EconPrincipalNet net;
  net.arity = spec.arity();
  net.points = config.grid.points();
  std::vector<int> actor_sizes{obs_dim};
  std::vector<int> critic_sizes{obs_dim};
  for (int l = 0; l < config.hidden_layers; ++l) {
    actor_sizes.push_back(config.hidden);
    critic_sizes.push_back(config.hidden);
  }
  actor_sizes.push_back(net.arity * net.head_size());
  critic_sizes.push_back(1);
  net.actor = Mlp::init(MlpSpec{actor_sizes, false}, rng, 0.01);
  net.critic = Mlp::init(MlpSpec{critic_sizes, false}, rng);
  net.last_action.clear();
  for (int d = 0; d < net.arity; ++d) net.last_action.push_back(config.grid.start);
  (void)spec;
  return net;
}

nlohmann::json EconPrincipalNet::to_json() const {
  nlohmann::json j;
  j["actor"] = actor.to_json();
  j["critic"] = critic.to_json();
  j["last_action"] = last_action;
  j["arity"] = arity;
  j["points"] = points;
  return j;
}

EconPrincipalNet EconPrincipalNet::from_json(const nlohmann::json& j) {
  EconPrincipalNet net;
  net.actor = Mlp::from_json(j.at("actor"));
  net.critic = Mlp::from_json(j.at("critic"));
  net.last_action = j.at("last_action").get<std::vector<double>>();
  net.arity = j.at("arity").get<int>();
  net.points = j.at("points").get<int>();
  return net;
}

namespace {

void apply_ablation(std::vector<double>& obs, bool ablate) {
  if (ablate) std::fill(obs.begin(), obs.end(), 1.0);
}

}  // namespace

PrincipalAction econ_act(EconPrincipalNet& net, std::span<const double> observation,
                         const ActionSpec& spec, const EconConfig& config, Rng& rng,
                         EconSample* record) {
  std::vector<double> obs(observation.begin(), observation.end());
  apply_ablation(obs, config.ablate_observations);

  thread_local std::vector<double> logits, scratch, probs, values;
  mlp_forward(net.actor, obs, logits, scratch);
  mlp_forward(net.critic, obs, values, scratch);

  const int hs = net.head_size();
  std::vector<int> choices(net.arity);
  std::vector<double> action_values(net.arity);
  double logprob = 0.0;
  probs.resize(hs);
  for (int d = 0; d < net.arity; ++d) {
    std::span<const double> head(logits.data() + static_cast<std::size_t>(d) * hs, hs);
    softmax(head, probs);
    const int choice = sample_categorical(probs, rng);
    choices[d] = choice;
    logprob += std::log(std::max(probs[choice], 1e-300));
    action_values[d] = choice == net.noop_index() ? net.last_action[d]
                                                  : config.grid.value(choice);
  }
  net.last_action = action_values;

  if (record) {
    record->obs = std::move(obs);
    record->choices = choices;
    record->logprob_old = logprob;
    record->value_old = values[0];
  }
  return make_action(spec, std::move(action_values));
}

double econ_loss(const EconPrincipalNet& net, const std::vector<EconSample>& batch,
                 const EconConfig& config) {
  if (batch.empty()) return 0.0;
  double adv_mean = 0.0, adv_std = 1.0;
  std::vector<double> adv(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) adv[i] = batch[i].payoff - batch[i].value_old;
  if (config.normalize_advantages) {
    adv_mean = std::accumulate(adv.begin(), adv.end(), 0.0) / adv.size();
    double var = 0.0;
    for (double a : adv) var += (a - adv_mean) * (a - adv_mean);
    adv_std = std::sqrt(var / adv.size()) + 1e-8;
  }

  thread_local std::vector<double> logits, scratch, probs, values;
  const int hs = net.head_size();
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const EconSample& s = batch[i];
    const double a = (adv[i] - adv_mean) / adv_std;
    mlp_forward(net.actor, s.obs, logits, scratch);
    mlp_forward(net.critic, s.obs, values, scratch);
    double logprob = 0.0;
    double entropy = 0.0;
    probs.resize(hs);
    for (int d = 0; d < net.arity; ++d) {
      std::span<const double> head(logits.data() + static_cast<std::size_t>(d) * hs, hs);
      softmax(head, probs);
      logprob += std::log(std::max(probs[s.choices[d]], 1e-300));
      entropy += categorical_entropy(probs);
    }
    const double ratio = std::exp(logprob - s.logprob_old);
    const double clipped = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
    loss += std::max(-a * ratio, -a * clipped);

    const double ret = s.payoff;
    const double v = values[0];
    double vl = (v - ret) * (v - ret);
    if (config.value_clip > 0.0) {
      const double vclipped =
          s.value_old + std::clamp(v - s.value_old, -config.value_clip, config.value_clip);
      vl = std::max(vl, (vclipped - ret) * (vclipped - ret));
    }
    loss += config.value_coef * 0.5 * vl;
    loss -= config.entropy_coef * entropy;
  }
  return loss / static_cast<double>(batch.size());
}

void econ_gradient(const EconPrincipalNet& net, const std::vector<EconSample>& batch,
                   const EconConfig& config, std::span<double> actor_grad,
                   std::span<double> critic_grad) {
  if (batch.empty()) return;
  double adv_mean = 0.0, adv_std = 1.0;
  std::vector<double> adv(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) adv[i] = batch[i].payoff - batch[i].value_old;
  if (config.normalize_advantages) {
    adv_mean = std::accumulate(adv.begin(), adv.end(), 0.0) / adv.size();
    double var = 0.0;
    for (double a : adv) var += (a - adv_mean) * (a - adv_mean);
    adv_std = std::sqrt(var / adv.size()) + 1e-8;
  }

  MlpTape actor_tape, critic_tape;
  const int hs = net.head_size();
  std::vector<double> probs(hs);
  std::vector<double> dlogits(static_cast<std::size_t>(net.arity) * hs);
  const double scale = 1.0 / static_cast<double>(batch.size());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const EconSample& s = batch[i];
    const double a = (adv[i] - adv_mean) / adv_std;
    actor_tape.forward(net.actor, s.obs);
    critic_tape.forward(net.critic, s.obs);
    auto logits = actor_tape.output();
    const double v = critic_tape.output()[0];

    double logprob = 0.0;
    std::vector<std::vector<double>> head_probs(net.arity, std::vector<double>(hs));
    for (int d = 0; d < net.arity; ++d) {
      std::span<const double> head(logits.data() + static_cast<std::size_t>(d) * hs, hs);
      softmax(head, head_probs[d]);
      logprob += std::log(std::max(head_probs[d][s.choices[d]], 1e-300));
    }
    const double ratio = std::exp(logprob - s.logprob_old);
    const double clipped_lo = 1.0 - config.clip, clipped_hi = 1.0 + config.clip;
    const double clipped = std::clamp(ratio, clipped_lo, clipped_hi);
    const double pg1 = -a * ratio, pg2 = -a * clipped;
    double dratio;
    if (pg1 >= pg2) {
      dratio = -a;
    } else {
      dratio = (ratio < clipped_lo || ratio > clipped_hi) ? 0.0 : -a;
    }

    std::fill(dlogits.begin(), dlogits.end(), 0.0);
    for (int d = 0; d < net.arity; ++d) {
      const auto& p = head_probs[d];
      double* dl = dlogits.data() + static_cast<std::size_t>(d) * hs;
      if (dratio != 0.0) {
        const double coef = dratio * ratio;
        for (int k = 0; k < hs; ++k) {
          dl[k] += coef * ((k == s.choices[d] ? 1.0 : 0.0) - p[k]);
        }
      }
      if (config.entropy_coef != 0.0) {
        const double h = categorical_entropy(p);
        for (int k = 0; k < hs; ++k) {
          if (p[k] > 0.0) dl[k] += config.entropy_coef * p[k] * (std::log(p[k]) + h);
        }
      }
    }
    for (double& g : dlogits) g *= scale;
    actor_tape.backward(net.actor, dlogits, actor_grad);

    const double ret = s.payoff;
    double dvalue;
    if (config.value_clip > 0.0) {
      const double vclipped =
          s.value_old + std::clamp(v - s.value_old, -config.value_clip, config.value_clip);
      const double vl1 = (v - ret) * (v - ret);
      const double vl2 = (vclipped - ret) * (vclipped - ret);
      if (vl1 >= vl2) {
        dvalue = v - ret;
      } else {
        dvalue = std::abs(v - s.value_old) > config.value_clip ? 0.0 : (vclipped - ret);
      }
    } else {
      dvalue = v - ret;
    }
    const std::vector<double> dv{config.value_coef * dvalue * scale};
    critic_tape.backward(net.critic, dv, critic_grad);
  }
}

void econ_update(EconPrincipalNet& net, Adam& actor_opt, Adam& critic_opt,
                 std::vector<EconSample>& batch, const EconConfig& config, Rng& rng) {
  if (batch.empty()) return;
  (void)rng;  // full-batch epochs; no minibatch shuffling needed at this size
  std::vector<double> actor_grad(net.actor.params.size());
  std::vector<double> critic_grad(net.critic.params.size());
  for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
    std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
    std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
    econ_gradient(net, batch, config, actor_grad, critic_grad);
    double sq = 0.0;
    for (double g : actor_grad) sq += g * g;
    for (double g : critic_grad) sq += g * g;
    if (config.grad_clip > 0.0 && std::sqrt(sq) > config.grad_clip) {
      const double sc = config.grad_clip / std::sqrt(sq);
      for (double& g : actor_grad) g *= sc;
      for (double& g : critic_grad) g *= sc;
    }
    for (double g : actor_grad) {
      if (!std::isfinite(g)) throw std::runtime_error("NaN in principal PPO update");
    }
    actor_opt.step(net.actor.params, actor_grad);
    critic_opt.step(net.critic.params, critic_grad);
  }
}

}  // namespace policylab
