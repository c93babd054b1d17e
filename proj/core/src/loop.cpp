#include "policylab/loop.hpp"

#include <stdexcept>

namespace policylab {

EvalResult evaluate_action_ex(const EnvModel& env, const JointPolicy& followers,
                              const PrincipalAction& action, int context,
                              int validation_episodes, Rng& rng) {
  if (validation_episodes < 1) throw std::invalid_argument("validation_episodes must be >= 1");
  EvalResult result;
  std::vector<HistoricalObservation> observations;
  auto game = env.make_game(action, context);
  std::vector<double> obs(game->obs_dim());
  std::vector<int> joint(game->n_agents());
  std::vector<double> raw(game->n_agents()), modified(game->n_agents());

  for (int episode = 0; episode < validation_episodes; ++episode) {
    game->reset(rng);
    while (!game->done()) {
      for (int agent = 0; agent < game->n_agents(); ++agent) {
        game->observe(agent, obs);
        joint[agent] = followers.act(agent, obs, rng);
      }
      game->step(joint, rng, raw, modified);
    }
    result.outcome.per_episode_payoffs.push_back(game->principal_payoff());
    observations.push_back(game->principal_observe());
    const std::vector<double> trace = game->principal_trace();
    if (result.mean_trace.empty()) {
      result.mean_trace.assign(trace.size(), 0.0);
    }
    for (std::size_t i = 0; i < trace.size(); ++i) result.mean_trace[i] += trace[i];
  }
  for (double& v : result.mean_trace) v /= validation_episodes;

  double sum = 0.0;
  for (double p : result.outcome.per_episode_payoffs) sum += p;
  result.outcome.payoff = sum / validation_episodes;
  result.outcome.observation = aggregate_observations(observations);
  result.outcome.validation_timesteps =
      static_cast<long>(validation_episodes) * game->episode_len();
  return result;
}

EpisodeOutcome evaluate_action(const EnvModel& env, const JointPolicy& followers,
                               const PrincipalAction& action, int context,
                               int validation_episodes, Rng& rng) {
  return evaluate_action_ex(env, followers, action, context, validation_episodes, rng).outcome;
}

RunRecord run_stackelberg_loop(const EnvModel& env, Oracle& oracle, Principal& principal,
                               const LoopConfig& config, std::uint64_t seed,
                               const std::string& config_digest, const LoopHooks& hooks,
                               RunRecord resume_from) {
  if (config.budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (config.validation_episodes < 1) {
    throw std::invalid_argument("validation_episodes must be >= 1");
  }

  RunRecord record = std::move(resume_from);
  record.seed = seed;
  record.config_digest = config_digest;

  const ActionSpec spec = env.action_spec();
  for (int step = static_cast<int>(record.steps.size()); step < config.budget; ++step) {
    StepContext ctx;
    ctx.step_index = step;
    if (env.context_count() > 0) {
      Rng ctx_rng = make_rng(seed, "env-context", step);
      ctx.context = env.draw_context(ctx_rng);
    }

    Rng principal_rng = make_rng(seed, "principal", step);
    PrincipalAction action = principal.act(ctx, principal_rng);
    if (static_cast<int>(action.values.size()) != spec.arity()) {
      throw std::runtime_error("principal action arity mismatch at step " +
                               std::to_string(step));
    }
    if (!action.in_bounds()) {
      throw std::runtime_error("principal action out of bounds at step " + std::to_string(step));
    }

    auto followers = oracle.best_response(env, action, ctx.context,
                                          make_rng(seed, "oracle-seed", step)());
    Rng eval_rng = make_rng(seed, "validation", step);
    EvalResult eval = evaluate_action_ex(env, *followers, action, ctx.context,
                                         config.validation_episodes, eval_rng);
    principal.observe(ctx, action, eval.outcome, eval.mean_trace);

    RunStep run_step;
    run_step.step_index = step;
    run_step.action = action;
    run_step.outcome = eval.outcome;
    record.steps.push_back(run_step);
    if (hooks.on_step) hooks.on_step(record.steps.back());
  }
  return record;
}

}  // namespace policylab
