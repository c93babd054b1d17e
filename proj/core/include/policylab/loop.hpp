#pragma once

#include <functional>

#include "policylab/followers/oracle.hpp"
#include "policylab/principal.hpp"

namespace policylab {

struct LoopConfig {
  int budget = 1;               // principal steps
  int validation_episodes = 1;
};

struct EvalResult {
  EpisodeOutcome outcome;
  std::vector<double> mean_trace;  // elementwise mean of principal traces
};

// Runs validation episodes with frozen follower policies; the payoff is the
// mean over episodes and the observation is count-averaged.
EvalResult evaluate_action_ex(const EnvModel& env, const JointPolicy& followers,
                              const PrincipalAction& action, int context,
                              int validation_episodes, Rng& rng);
EpisodeOutcome evaluate_action(const EnvModel& env, const JointPolicy& followers,
                               const PrincipalAction& action, int context,
                               int validation_episodes, Rng& rng);

struct LoopHooks {
  std::function<void(const RunStep&)> on_step;  // called after each recorded step
};

// The outer driver loop: each step the principal commits to an action, the
// action induces a game, the oracle computes the follower best response, the
// payoff is evaluated over validation episodes and fed back. Deterministic
// given (seed, scripted clients).
RunRecord run_stackelberg_loop(const EnvModel& env, Oracle& oracle, Principal& principal,
                               const LoopConfig& config, std::uint64_t seed,
                               const std::string& config_digest = "",
                               const LoopHooks& hooks = {}, RunRecord resume_from = {});

}  // namespace policylab
