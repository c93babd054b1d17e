#pragma once

#include <span>
#include <vector>

#include "policylab/followers/policy.hpp"

namespace policylab {

// Shared follower-training hyperparameters (per-environment defaults from
// the experiment protocol).
struct TrainerConfig {
  double lr = 3e-4;
  double gamma = 0.998;
  double gae_lambda = 0.98;
  double clip = 0.2;
  double value_clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.025;
  int minibatch = 128;
  int update_epochs = 4;
  double grad_clip = 0.5;
  double adam_eps = 1e-5;
  int pg_batch_episodes = 10;
  bool normalize_advantages = true;

  void validate() const;
  static TrainerConfig harvest_defaults();
  static TrainerConfig cleanup_defaults();
  static TrainerConfig cer_defaults();
};

struct Trajectory {
  std::vector<std::vector<double>> obs;
  std::vector<int> actions;
  std::vector<double> rewards;  // reward-modified
};

// Reward-to-go policy gradient with an entropy bonus, one Adam step over the
// batch of complete episodes.
void pg_update(Mlp& policy, Adam& opt, std::span<const Trajectory> batch,
               const TrainerConfig& config);

// Gradient of the PG loss only (no optimizer step); exposed for the
// finite-difference checks.
void pg_gradient(const Mlp& policy, std::span<const Trajectory> batch,
                 const TrainerConfig& config, std::span<double> grad);
double pg_loss(const Mlp& policy, std::span<const Trajectory> batch,
               const TrainerConfig& config);

struct PpoSample {
  std::vector<double> obs;
  int action = 0;
  double logprob_old = 0.0;
  double reward = 0.0;
  double value_old = 0.0;
  bool done = false;
};

struct PpoBatch {
  std::vector<PpoSample> samples;   // episode-ordered
  std::vector<double> advantages;   // filled by compute_gae
  std::vector<double> returns;
};

// GAE(lambda) over episode-ordered samples; `done` marks episode boundaries.
void compute_gae(PpoBatch& batch, double gamma, double lambda);

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

// Clipped-surrogate PPO with value clipping, entropy bonus, minibatching and
// epochs. Trunk training can be disabled (pretraining freeze).
PpoStats ppo_update(GridPolicy& policy, Adam& trunk_opt, Adam& actor_opt, Adam& critic_opt,
                    PpoBatch& batch, const TrainerConfig& config, Rng& rng, bool train_trunk);

// Loss and gradient of one full-batch PPO epoch, for finite-difference
// checks (no minibatching, no optimizer).
double ppo_loss(const GridPolicy& policy, const PpoBatch& batch, const TrainerConfig& config);
void ppo_gradient(const GridPolicy& policy, const PpoBatch& batch, const TrainerConfig& config,
                  std::span<double> trunk_grad, std::span<double> actor_grad,
                  std::span<double> critic_grad);

}  // namespace policylab
