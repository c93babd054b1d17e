#include "policylab/followers/oracle.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "policylab/envs/cleanup.hpp"
#include "policylab/envs/harvest.hpp"

namespace policylab {

void OracleConfig::validate() const {
  if (convergence_episodes < 1) {
    throw std::invalid_argument("convergence_episodes must be >= 1");
  }
}

OracleConfig OracleConfig::for_env(EnvKind kind) {
  OracleConfig c;
  switch (kind) {
    case EnvKind::Harvest:
      c.convergence_episodes = 5;
      c.pretrain = true;
      c.parameter_sharing = true;
      break;
    case EnvKind::Cleanup:
      c.convergence_episodes = 20;
      c.pretrain = true;
      c.parameter_sharing = true;
      // Cleaning is slow to discover; longer head training does not erode
      // the no-cleaning free market the way it erodes Harvest's overharvest.
      c.phase2_rounds = 12;
      break;
    case EnvKind::Cer:
      c.convergence_episodes = 500;
      c.pretrain = false;
      c.parameter_sharing = false;
      break;
  }
  return c;
}

void PretrainedParams::save(const std::string& path) const {
  nlohmann::json j;
  j["version"] = 1;
  j["env"] = policylab::to_string(env);
  j["config_digest"] = config_digest;
  j["policy"] = policy.to_json();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write snapshot: " + path);
  out << j.dump();
}

PretrainedParams PretrainedParams::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read snapshot: " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("version").get<int>() != 1) throw std::runtime_error("unknown snapshot version");
  PretrainedParams p;
  p.env = env_kind_from_string(j.at("env").get<std::string>());
  p.config_digest = j.at("config_digest").get<std::string>();
  p.policy = GridPolicy::from_json(j.at("policy"));
  return p;
}

namespace {

// Rolls one episode with independent per-agent policies, collecting
// reward-modified trajectories.
double rollout_pg_episode(Game& game, const std::vector<Mlp>& nets, Rng& rng,
                          std::vector<Trajectory>* out) {
  const int n = game.n_agents();
  game.reset(rng);
  std::vector<double> obs(game.obs_dim());
  std::vector<int> actions(n);
  std::vector<double> raw(n), modified(n);
  while (!game.done()) {
    for (int agent = 0; agent < n; ++agent) {
      game.observe(agent, obs);
      actions[agent] = sample_policy_action(nets[agent], obs, rng);
      if (out) (*out)[agent].obs.push_back(obs);
    }
    game.step(actions, rng, raw, modified);
    if (out) {
      for (int agent = 0; agent < n; ++agent) {
        (*out)[agent].actions.push_back(actions[agent]);
        (*out)[agent].rewards.push_back(modified[agent]);
      }
    }
  }
  return game.principal_payoff();
}

// Rolls one shared-policy episode and appends agent-contiguous PPO samples.
void rollout_ppo_episode(Game& game, const GridPolicy& policy, Rng& rng, PpoBatch& batch) {
  const int n = game.n_agents();
  game.reset(rng);
  std::vector<double> obs(game.obs_dim());
  std::vector<int> actions(n);
  std::vector<double> raw(n), modified(n);
  std::vector<double> logits, scratch, probs;
  std::vector<std::vector<PpoSample>> per_agent(n);

  while (!game.done()) {
    for (int agent = 0; agent < n; ++agent) {
      game.observe(agent, obs);
      double value = 0.0;
      policy.logits_value(obs, logits, &value, scratch);
      probs.resize(logits.size());
      softmax(logits, probs);
      const int a = sample_categorical(probs, rng);
      PpoSample s;
      s.obs.assign(obs.begin(), obs.end());
      s.action = a;
      s.logprob_old = std::log(std::max(probs[a], 1e-300));
      s.value_old = value;
      per_agent[agent].push_back(std::move(s));
      actions[agent] = a;
    }
    game.step(actions, rng, raw, modified);
    for (int agent = 0; agent < n; ++agent) {
      per_agent[agent].back().reward = modified[agent];
    }
  }
  for (int agent = 0; agent < n; ++agent) {
    if (!per_agent[agent].empty()) per_agent[agent].back().done = true;
    for (auto& s : per_agent[agent]) batch.samples.push_back(std::move(s));
  }
}

}  // namespace

CerOracle::CerOracle(OracleConfig oracle_config, TrainerConfig trainer_config)
    : oracle_(oracle_config), trainer_(trainer_config) {
  oracle_.validate();
  trainer_.validate();
}

namespace {

// Per-episode update path that reuses the rollout activations for the
// gradient; identical arithmetic to pg_gradient with a one-episode batch.
class FusedCerTrainer {
 public:
  FusedCerTrainer(int n_agents, int episode_len)
      : tapes_(n_agents, std::vector<MlpTape>(episode_len)),
        actions_(n_agents, std::vector<int>(episode_len)),
        rewards_(n_agents, std::vector<double>(episode_len)) {}

  void run_episode(Game& game, std::vector<Mlp>& nets, std::vector<Adam>& opts,
                   const TrainerConfig& config, Rng& rng, int episode_index) {
    const int n = game.n_agents();
    game.reset(rng);
    obs_.resize(game.obs_dim());
    joint_.resize(n);
    raw_.resize(n);
    modified_.resize(n);
    probs_.resize(game.n_actions());
    int t = 0;
    while (!game.done()) {
      for (int agent = 0; agent < n; ++agent) {
        game.observe(agent, obs_);
        MlpTape& tape = tapes_[agent][t];
        tape.forward(nets[agent], obs_);
        softmax(tape.output(), probs_);
        const int a = sample_categorical(probs_, rng);
        joint_[agent] = a;
        actions_[agent][t] = a;
      }
      game.step(joint_, rng, raw_, modified_);
      for (int agent = 0; agent < n; ++agent) rewards_[agent][t] = modified_[agent];
      ++t;
    }
    const int steps = t;
    dlogits_.resize(game.n_actions());
    for (int agent = 0; agent < n; ++agent) {
      grad_.assign(nets[agent].params.size(), 0.0);
      double ret = 0.0;
      returns_.resize(steps);
      for (int k = steps - 1; k >= 0; --k) {
        ret = rewards_[agent][k] + config.gamma * ret;
        returns_[k] = ret;
      }
      for (int k = 0; k < steps; ++k) {
        MlpTape& tape = tapes_[agent][k];
        softmax(tape.output(), probs_);
        const double h = categorical_entropy(probs_);
        for (std::size_t j = 0; j < probs_.size(); ++j) {
          double g = returns_[k] *
                     (probs_[j] - (static_cast<int>(j) == actions_[agent][k] ? 1.0 : 0.0));
          if (config.entropy_coef != 0.0 && probs_[j] > 0.0) {
            g += config.entropy_coef * probs_[j] * (std::log(probs_[j]) + h);
          }
          dlogits_[j] = g;
        }
        tape.backward(nets[agent], dlogits_, grad_);
      }
      for (double g : grad_) {
        if (!std::isfinite(g)) {
          throw std::runtime_error("NaN in policy-gradient update at episode " +
                                   std::to_string(episode_index));
        }
      }
      clip_grad_norm(grad_, config.grad_clip);
      opts[agent].step(nets[agent].params, grad_);
    }
  }

 private:
  std::vector<std::vector<MlpTape>> tapes_;
  std::vector<std::vector<int>> actions_;
  std::vector<std::vector<double>> rewards_;
  std::vector<double> obs_, raw_, modified_, probs_, dlogits_, grad_, returns_;
  std::vector<int> joint_;
};

}  // namespace

std::shared_ptr<const JointPolicy> CerOracle::best_response(const EnvModel& env,
                                                            const PrincipalAction& action,
                                                            int context, std::uint64_t seed) {
  if (!action.in_bounds()) throw std::invalid_argument("principal action out of bounds");
  auto game = env.make_game(action, context);
  const int n = game->n_agents();

  Rng init_rng = make_rng(seed, "cer-oracle-init");
  std::vector<int> sizes;
  sizes.push_back(game->obs_dim());
  for (int h : oracle_.cer_hidden) sizes.push_back(h);
  sizes.push_back(game->n_actions());
  std::vector<Mlp> nets;
  std::vector<Adam> opts(n);
  for (int agent = 0; agent < n; ++agent) {
    nets.push_back(Mlp::init(MlpSpec{sizes, false}, init_rng, 0.01));
    opts[agent].lr = trainer_.lr;
    opts[agent].eps = trainer_.adam_eps;
    opts[agent].reset(nets[agent].params.size());
  }

  Rng rollout_rng = make_rng(seed, "cer-oracle-rollout");
  if (trainer_.pg_batch_episodes == 1) {
    FusedCerTrainer trainer(n, game->episode_len());
    for (int episode = 0; episode < oracle_.convergence_episodes; ++episode) {
      trainer.run_episode(*game, nets, opts, trainer_, rollout_rng, episode);
    }
    return std::make_shared<IndependentPolicy>(std::move(nets));
  }

  std::vector<std::vector<Trajectory>> pending(n);
  for (int episode = 0; episode < oracle_.convergence_episodes; ++episode) {
    std::vector<Trajectory> trajs(n);
    rollout_pg_episode(*game, nets, rollout_rng, &trajs);
    for (int agent = 0; agent < n; ++agent) pending[agent].push_back(std::move(trajs[agent]));
    const bool last = episode + 1 == oracle_.convergence_episodes;
    if (static_cast<int>(pending[0].size()) >= trainer_.pg_batch_episodes || last) {
      for (int agent = 0; agent < n; ++agent) {
        try {
          pg_update(nets[agent], opts[agent], pending[agent], trainer_);
        } catch (const std::runtime_error& e) {
          throw std::runtime_error(std::string(e.what()) + " at episode " +
                                   std::to_string(episode));
        }
        pending[agent].clear();
      }
    }
  }
  return std::make_shared<IndependentPolicy>(std::move(nets));
}

GridOracle::GridOracle(PretrainedParams snapshot, OracleConfig oracle_config,
                       TrainerConfig trainer_config)
    : snapshot_(std::move(snapshot)), oracle_(oracle_config), trainer_(trainer_config) {
  oracle_.validate();
  trainer_.validate();
}

std::shared_ptr<const JointPolicy> GridOracle::best_response(const EnvModel& env,
                                                             const PrincipalAction& action,
                                                             int context, std::uint64_t seed) {
  if (!action.in_bounds()) throw std::invalid_argument("principal action out of bounds");
  GridPolicy policy = snapshot_.policy;  // reset to the snapshot
  Adam trunk_opt(trainer_.lr), actor_opt(trainer_.lr), critic_opt(trainer_.lr);
  trunk_opt.eps = actor_opt.eps = critic_opt.eps = trainer_.adam_eps;

  auto game = env.make_game(action, context);
  Rng rng = make_rng(seed, "grid-oracle");
  for (int episode = 0; episode < oracle_.convergence_episodes; ++episode) {
    PpoBatch batch;
    rollout_ppo_episode(*game, policy, rng, batch);
    compute_gae(batch, trainer_.gamma, trainer_.gae_lambda);
    try {
      ppo_update(policy, trunk_opt, actor_opt, critic_opt, batch, trainer_, rng,
                 /*train_trunk=*/false);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " at episode " +
                               std::to_string(episode));
    }
  }
  return std::make_shared<SharedGridJointPolicy>(std::move(policy));
}

std::vector<PrincipalAction> pretrain_action_grid(const ActionSpec& spec) {
  const int arity = spec.arity();
  std::vector<PrincipalAction> actions;
  std::vector<int> idx(arity, 0);
  while (true) {
    std::vector<double> values(arity);
    for (int d = 0; d < arity; ++d) {
      const auto& b = spec.bounds[d];
      values[d] = b.lo + (b.hi - b.lo) * idx[d] / 2.0;
    }
    actions.push_back(make_action(spec, values));
    int d = 0;
    while (d < arity && ++idx[d] == 3) idx[d++] = 0;
    if (d == arity) break;
  }
  return actions;
}

double harvest_remaining_fraction(const EnvModel& env, const GridPolicy& policy, Rng& rng) {
  PrincipalAction zero = make_action(env.action_spec(), std::vector<double>(3, 0.0));
  auto game = env.make_game(zero, -1);
  SharedGridJointPolicy joint(policy);
  std::vector<double> obs(game->obs_dim());
  std::vector<int> actions(game->n_agents());
  std::vector<double> raw(game->n_agents()), modified(game->n_agents());
  game->reset(rng);
  while (!game->done()) {
    for (int agent = 0; agent < game->n_agents(); ++agent) {
      game->observe(agent, obs);
      actions[agent] = joint.act(agent, obs, rng);
    }
    game->step(actions, rng, raw, modified);
  }
  const auto& hg = dynamic_cast<const HarvestGame&>(*game);
  return static_cast<double>(hg.apples_remaining()) / std::max(1, hg.initial_apples());
}

double cleanup_cleans_per_episode(const EnvModel& env, const GridPolicy& policy, Rng& rng) {
  PrincipalAction zero = make_action(env.action_spec(), std::vector<double>(3, 0.0));
  auto game = env.make_game(zero, -1);
  SharedGridJointPolicy joint(policy);
  std::vector<double> obs(game->obs_dim());
  std::vector<int> actions(game->n_agents());
  std::vector<double> raw(game->n_agents()), modified(game->n_agents());
  game->reset(rng);
  while (!game->done()) {
    for (int agent = 0; agent < game->n_agents(); ++agent) {
      game->observe(agent, obs);
      actions[agent] = joint.act(agent, obs, rng);
    }
    game->step(actions, rng, raw, modified);
  }
  const auto& cg = dynamic_cast<const CleanupGame&>(*game);
  return static_cast<double>(cg.state().clean_count);
}

PretrainedParams pretrain_oracle(const EnvModel& env, const TrainerConfig& trainer_config,
                                 const OracleConfig& oracle_config, Rng& rng,
                                 PretrainReport* report) {
  if (env.kind() == EnvKind::Cer) {
    throw std::invalid_argument("CER followers are not pretrained");
  }
  oracle_config.validate();
  trainer_config.validate();

  const ActionSpec spec = env.action_spec();
  PrincipalAction zero = make_action(spec, std::vector<double>(spec.arity(), 0.0));
  auto probe = env.make_game(zero, -1);
  const int tail_dim = env.n_agents() + spec.arity();
  GridPolicy policy = GridPolicy::init(probe->obs_dim(), tail_dim, probe->n_actions(),
                                       oracle_config.feature_dim, oracle_config.head_hidden, rng);

  Adam trunk_opt(trainer_config.lr), actor_opt(trainer_config.lr), critic_opt(trainer_config.lr);
  trunk_opt.eps = actor_opt.eps = critic_opt.eps = trainer_config.adam_eps;

  // Phase 1: free market, full network, behavioral stopping rule.
  auto criterion_met = [&](double* metric) {
    if (env.kind() == EnvKind::Harvest) {
      const double frac = harvest_remaining_fraction(env, policy, rng);
      if (metric) *metric = frac;
      return frac < 0.10;
    }
    const double cleans = cleanup_cleans_per_episode(env, policy, rng);
    if (metric) *metric = cleans;
    return cleans <= 1.0;
  };

  auto game = env.make_game(zero, -1);
  int episodes = 0;
  double metric = 0.0;
  bool converged = false;
  while (episodes < oracle_config.phase1_max_episodes) {
    PpoBatch batch;
    rollout_ppo_episode(*game, policy, rng, batch);
    compute_gae(batch, trainer_config.gamma, trainer_config.gae_lambda);
    ppo_update(policy, trunk_opt, actor_opt, critic_opt, batch, trainer_config, rng,
               /*train_trunk=*/true);
    ++episodes;
    if (episodes >= oracle_config.phase1_min_episodes &&
        episodes % oracle_config.phase1_check_every == 0 && criterion_met(&metric)) {
      converged = true;
      break;
    }
  }
  if (!converged && !criterion_met(&metric)) {
    std::ostringstream msg;
    msg << "pretraining phase 1 did not reach the free-market criterion after " << episodes
        << " episodes (" << to_string(env.kind()) << " metric " << metric << ")";
    throw std::runtime_error(msg.str());
  }
  if (report) {
    report->phase1_episodes = episodes;
    report->phase1_metric = metric;
  }

  // Phase 2: trunk frozen, heads across the action lattice. One episode per
  // lattice game per round, merged into a single batch so every update sees
  // all tasks at once.
  const std::vector<PrincipalAction> grid = pretrain_action_grid(spec);
  int phase2_episodes = 0;
  for (int round = 0; round < oracle_config.phase2_rounds; ++round) {
    PpoBatch batch;
    for (const auto& phi : grid) {
      auto g = env.make_game(phi, -1);
      rollout_ppo_episode(*g, policy, rng, batch);
      ++phase2_episodes;
    }
    compute_gae(batch, trainer_config.gamma, trainer_config.gae_lambda);
    ppo_update(policy, trunk_opt, actor_opt, critic_opt, batch, trainer_config, rng,
               /*train_trunk=*/false);
  }
  if (report) report->phase2_episodes = phase2_episodes;

  PretrainedParams params;
  params.policy = std::move(policy);
  params.env = env.kind();
  return params;
}

}  // namespace policylab
