#include "policylab/neural/metagrad.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace policylab {

MetaIncentiveNet MetaIncentiveNet::init(int obs_dim, const ActionSpec& spec,
                                        const MetaGradConfig& config, Rng& rng) {
  MetaIncentiveNet net;
  net.spec = spec;
  std::vector<int> sizes{obs_dim};
  for (int l = 0; l < config.hidden_layers; ++l) sizes.push_back(config.hidden);
  sizes.push_back(spec.arity());
  net.body = Mlp::init(MlpSpec{sizes, false}, rng);
  return net;
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<double> MetaIncentiveNet::incentives(std::span<const double> obs) const {
  thread_local std::vector<double> raw, scratch;
  mlp_forward(body, obs, raw, scratch);
  std::vector<double> out(raw.size());
  for (std::size_t s = 0; s < raw.size(); ++s) {
    const auto& b = spec.bounds[s];
    out[s] = b.lo + (b.hi - b.lo) * sigmoid(raw[s]);
  }
  return out;
}

std::vector<double> MetaIncentiveNet::incentives_with_jacobian(
    std::span<const double> obs, std::vector<std::vector<double>>& jacobian) const {
  MlpTape tape;
  tape.forward(body, obs);
  auto raw = tape.output();
  const int arity = spec.arity();
  std::vector<double> out(arity);
  jacobian.assign(arity, std::vector<double>(body.params.size(), 0.0));
  std::vector<double> dl(arity, 0.0);
  for (int s = 0; s < arity; ++s) {
    const auto& b = spec.bounds[s];
    const double sig = sigmoid(raw[s]);
    out[s] = b.lo + (b.hi - b.lo) * sig;
    std::fill(dl.begin(), dl.end(), 0.0);
    dl[s] = (b.hi - b.lo) * sig * (1.0 - sig);
    tape.backward(body, dl, jacobian[s]);
  }
  return out;
}

nlohmann::json MetaIncentiveNet::to_json() const {
  nlohmann::json j;
  j["body"] = body.to_json();
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : spec.bounds) bounds.push_back({b.lo, b.hi});
  j["bounds"] = bounds;
  j["kind"] = to_string(spec.kind);
  return j;
}

MetaIncentiveNet MetaIncentiveNet::from_json(const nlohmann::json& j) {
  MetaIncentiveNet net;
  net.body = Mlp::from_json(j.at("body"));
  for (const auto& b : j.at("bounds")) net.spec.bounds.push_back(Interval{b[0], b[1]});
  net.spec.kind = ActionKind::CerIncentiveRow;
  return net;
}

namespace {

struct AgentRoll {
  std::vector<std::vector<double>> obs;
  std::vector<int> actions;
  std::vector<int> positions;     // state occupied after the step
  std::vector<double> raw;
  std::vector<std::vector<double>> logp_grads;  // per step, d log pi / d params
};

// Rolls one CER episode, recording per-agent log-prob parameter gradients.
void roll_episode(const CerModel& env, int lever, std::span<const double> incentives,
                  const std::vector<Mlp>& agents, Rng& rng, std::vector<AgentRoll>& rolls,
                  std::vector<double>& id_rewards, double* payoff) {
  PrincipalAction action = make_action(env.action_spec(),
                                       std::vector<double>(incentives.begin(), incentives.end()));
  auto game_ptr = env.make_game(action, lever);
  auto& game = dynamic_cast<CerGame&>(*game_ptr);
  const int n = game.n_agents();
  rolls.assign(n, AgentRoll{});
  id_rewards.clear();

  game.reset(rng);
  std::vector<double> obs(game.obs_dim());
  std::vector<int> joint(n);
  std::vector<double> raw(n), modified(n);
  MlpTape tape;
  std::vector<double> probs, dlogits;
  while (!game.done()) {
    for (int agent = 0; agent < n; ++agent) {
      game.observe(agent, obs);
      tape.forward(agents[agent], obs);
      probs.resize(agents[agent].spec.out_dim());
      softmax(tape.output(), probs);
      const int a = sample_categorical(probs, rng);
      joint[agent] = a;
      auto& r = rolls[agent];
      r.obs.push_back(obs);
      r.actions.push_back(a);
      dlogits.assign(probs.size(), 0.0);
      for (std::size_t k = 0; k < probs.size(); ++k) {
        dlogits[k] = (static_cast<int>(k) == a ? 1.0 : 0.0) - probs[k];
      }
      r.logp_grads.emplace_back(agents[agent].params.size(), 0.0);
      tape.backward(agents[agent], dlogits, r.logp_grads.back());
    }
    game.step(joint, rng, raw, modified);
    double joint_raw = 0.0;
    for (int agent = 0; agent < n; ++agent) {
      rolls[agent].raw.push_back(raw[agent]);
      rolls[agent].positions.push_back(game.state().positions[agent]);
      joint_raw += raw[agent];
    }
    id_rewards.push_back(joint_raw);
  }
  if (payoff) *payoff = game.principal_payoff();
}

}  // namespace

MetaStepResult meta_inner_and_validate(const CerModel& env, int lever,
                                       std::vector<Mlp>& agents,
                                       std::span<const double> incentives,
                                       const TrainerConfig& agent_trainer, double agent_lr,
                                       double baseline, std::uint64_t rollout_seed,
                                       bool detach_incentives) {
  const int n_states = env.config().n_states();
  const double gamma = agent_trainer.gamma;
  const int n = static_cast<int>(agents.size());

  // Training trajectory tau under theta, rewards r_raw + incentives.
  Rng train_rng = make_rng(rollout_seed, "meta-train");
  std::vector<AgentRoll> train_rolls;
  std::vector<double> train_id;
  roll_episode(env, lever, incentives, agents, train_rng, train_rolls, train_id, nullptr);

  // Inner update theta' = theta - alpha * grad L, L the reward-to-go PG loss
  // with entropy bonus. The incentives enter linearly via the returns.
  std::vector<Mlp> updated = agents;
  std::vector<double> probs, dlogits, ent_grad;
  MlpTape tape;
  for (int agent = 0; agent < n; ++agent) {
    auto& roll = train_rolls[agent];
    const int T = static_cast<int>(roll.actions.size());
    std::vector<double> returns(T);
    double acc = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      acc = roll.raw[t] + incentives[roll.positions[t]] + gamma * acc;
      returns[t] = acc;
    }
    std::vector<double> grad_l(agents[agent].params.size(), 0.0);
    for (int t = 0; t < T; ++t) {
      // -g_t * G_t
      for (std::size_t p = 0; p < grad_l.size(); ++p) {
        grad_l[p] -= roll.logp_grads[t][p] * returns[t];
      }
      // entropy bonus d(-c_H H)/d theta
      if (agent_trainer.entropy_coef != 0.0) {
        tape.forward(agents[agent], roll.obs[t]);
        probs.resize(agents[agent].spec.out_dim());
        softmax(tape.output(), probs);
        const double h = categorical_entropy(probs);
        dlogits.assign(probs.size(), 0.0);
        for (std::size_t k = 0; k < probs.size(); ++k) {
          if (probs[k] > 0.0) {
            dlogits[k] = agent_trainer.entropy_coef * probs[k] * (std::log(probs[k]) + h);
          }
        }
        tape.backward(agents[agent], dlogits, grad_l);
      }
    }
    for (std::size_t p = 0; p < grad_l.size(); ++p) {
      updated[agent].params[p] -= agent_lr * grad_l[p];
      if (!std::isfinite(updated[agent].params[p])) {
        throw std::runtime_error("NaN in MetaGrad inner update");
      }
    }
  }
  agents = updated;

  // Validation trajectory tau' under theta'; ID reward per step is the joint
  // raw reward (the per-step social-welfare delta).
  Rng val_rng = make_rng(rollout_seed, "meta-val");
  std::vector<AgentRoll> val_rolls;
  std::vector<double> val_id;
  MetaStepResult result;
  roll_episode(env, lever, incentives, agents, val_rng, val_rolls, val_id,
               &result.validation_payoff);

  const int T = static_cast<int>(val_id.size());
  std::vector<double> rtg(T);
  double acc = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    acc = val_id[t] + gamma * acc;
    rtg[t] = acc;
  }
  result.mean_id_return = T > 0 ? rtg[0] : 0.0;

  // v = dJ/d theta' per agent; J = sum_t log pi(a_t) * (rtg_t - baseline).
  result.d_incentives.assign(n_states, 0.0);
  double surrogate = 0.0;
  for (int agent = 0; agent < n; ++agent) {
    const auto& vroll = val_rolls[agent];
    std::vector<double> v(agents[agent].params.size(), 0.0);
    for (int t = 0; t < static_cast<int>(vroll.actions.size()); ++t) {
      const double coef = rtg[t] - baseline;
      for (std::size_t p = 0; p < v.size(); ++p) v[p] += coef * vroll.logp_grads[t][p];
      tape.forward(agents[agent], vroll.obs[t]);
      probs.resize(agents[agent].spec.out_dim());
      softmax(tape.output(), probs);
      surrogate += std::log(std::max(probs[vroll.actions[t]], 1e-300)) * coef;
    }
    if (detach_incentives) continue;

    // dJ/d i_s = alpha * sum_k w_k 1[pos_k = s], w_k = sum_{t<=k} gamma^{k-t} c_t,
    // c_t = v . g_t on the training trajectory.
    const auto& troll = train_rolls[agent];
    double w = 0.0;
    for (int k = 0; k < static_cast<int>(troll.actions.size()); ++k) {
      double c = 0.0;
      for (std::size_t p = 0; p < v.size(); ++p) c += v[p] * troll.logp_grads[k][p];
      w = c + gamma * w;
      result.d_incentives[troll.positions[k]] += agent_lr * w;
    }
  }
  result.surrogate = surrogate;
  return result;
}

MetaGradDriver::MetaGradDriver(const CerModel& env, MetaGradConfig config,
                               TrainerConfig agent_trainer, std::uint64_t seed)
    : cer_(env.config()), config_(config), trainer_(agent_trainer) {
  macro_obs_dim_ = env.trace_channels() * 16 + cer_.L;
  Rng rng = make_rng(seed, "metagrad-init");
  net_ = MetaIncentiveNet::init(macro_obs_dim_, env.action_spec(), config_, rng);
  opt_ = Adam(config_.lr, 1e-5);
  opt_.reset(net_.body.params.size());

  std::vector<int> sizes{2 * cer_.n_states() + 1, 32, 32, cer_.n_states()};
  for (int agent = 0; agent < cer_.n; ++agent) {
    agents_.push_back(Mlp::init(MlpSpec{sizes, false}, rng, 0.01));
  }
}

PrincipalAction MetaGradDriver::act(std::span<const double> macro_obs) {
  std::vector<double> obs(macro_obs.begin(), macro_obs.end());
  if (static_cast<int>(obs.size()) != macro_obs_dim_) {
    throw std::invalid_argument("metagrad macro-observation size mismatch");
  }
  if (config_.ablate_observations) std::fill(obs.begin(), obs.end(), 1.0);
  std::vector<double> values = net_.incentives_with_jacobian(obs, last_jacobian_);
  have_pending_act_ = true;
  return make_action(net_.spec, std::move(values));
}

std::shared_ptr<const JointPolicy> MetaGradDriver::best_response(const EnvModel& env,
                                                                 const PrincipalAction& action,
                                                                 int context,
                                                                 std::uint64_t seed) {
  const auto& cer_env = dynamic_cast<const CerModel&>(env);
  if (!have_pending_act_) {
    throw std::logic_error("MetaGradDriver::best_response requires a preceding act()");
  }
  MetaStepResult step = meta_inner_and_validate(cer_env, context, agents_, action.values,
                                                trainer_, config_.agent_lr, baseline_, seed);

  // Meta loss: -J + cost * sum_s i_s, chained through the sigmoid head.
  std::vector<double> grad(net_.body.params.size(), 0.0);
  for (int s = 0; s < net_.spec.arity(); ++s) {
    const double d_loss_d_i = -step.d_incentives[s] + config_.incentive_cost;
    for (std::size_t p = 0; p < grad.size(); ++p) {
      grad[p] += d_loss_d_i * last_jacobian_[s][p];
    }
  }
  for (double g : grad) {
    if (!std::isfinite(g)) throw std::runtime_error("NaN meta-gradient");
  }
  opt_.step(net_.body.params, grad);
  baseline_ = config_.baseline_decay * baseline_ +
              (1.0 - config_.baseline_decay) * step.mean_id_return;
  have_pending_act_ = false;
  return std::make_shared<IndependentPolicy>(agents_);
}

nlohmann::json MetaGradDriver::snapshot() const {
  nlohmann::json j;
  j["net"] = net_.to_json();
  nlohmann::json ag = nlohmann::json::array();
  for (const auto& a : agents_) ag.push_back(a.to_json());
  j["agents"] = ag;
  j["baseline"] = baseline_;
  return j;
}

void MetaGradDriver::restore(const nlohmann::json& j) {
  net_ = MetaIncentiveNet::from_json(j.at("net"));
  agents_.clear();
  for (const auto& a : j.at("agents")) agents_.push_back(Mlp::from_json(a));
  baseline_ = j.at("baseline").get<double>();
  opt_ = Adam(config_.lr, 1e-5);
  opt_.reset(net_.body.params.size());
}

}  // namespace policylab
