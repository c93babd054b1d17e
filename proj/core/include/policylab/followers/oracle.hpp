#pragma once

#include <memory>
#include <string>

#include "policylab/envs/env_model.hpp"
#include "policylab/followers/trainers.hpp"

namespace policylab {

struct OracleConfig {
  int convergence_episodes = 500;
  bool pretrain = false;
  bool reset_each_step = true;
  bool parameter_sharing = false;
  int n_pretrain_actions = 27;   // 3 levels per action dimension
  int phase1_min_episodes = 300; // the trunk needs real play before freezing
  int phase1_max_episodes = 4000;
  int phase1_check_every = 25;
  // One episode per lattice action per round, merged into a single update.
  // Longer schedules sharpen tax conditioning but erode the free-market
  // overharvest that the snapshot must keep.
  int phase2_rounds = 4;
  int feature_dim = 64;
  int head_hidden = 64;
  std::vector<int> cer_hidden{32, 32};

  void validate() const;
  static OracleConfig for_env(EnvKind kind);
};

// Frozen pretrained follower snapshot (Harvest / Clean Up).
struct PretrainedParams {
  GridPolicy policy;
  std::string config_digest;
  EnvKind env = EnvKind::Harvest;

  void save(const std::string& path) const;
  static PretrainedParams load(const std::string& path);
};

// Best-response oracle: returns converged follower policies for the game
// induced by a principal action. A pure function of (action, context, seed)
// given its configuration and snapshot.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::shared_ptr<const JointPolicy> best_response(const EnvModel& env,
                                                           const PrincipalAction& action,
                                                           int context,
                                                           std::uint64_t seed) = 0;
};

// CER: independent per-agent MLPs, fresh initialization per principal step,
// reward-to-go policy gradient.
class CerOracle final : public Oracle {
 public:
  CerOracle(OracleConfig oracle_config, TrainerConfig trainer_config);
  std::shared_ptr<const JointPolicy> best_response(const EnvModel& env,
                                                   const PrincipalAction& action, int context,
                                                   std::uint64_t seed) override;

 private:
  OracleConfig oracle_;
  TrainerConfig trainer_;
};

// Harvest / Clean Up: shared-parameter PPO heads on a frozen pretrained
// trunk, reset to the snapshot each principal step.
class GridOracle final : public Oracle {
 public:
  GridOracle(PretrainedParams snapshot, OracleConfig oracle_config, TrainerConfig trainer_config);
  std::shared_ptr<const JointPolicy> best_response(const EnvModel& env,
                                                   const PrincipalAction& action, int context,
                                                   std::uint64_t seed) override;

 private:
  PretrainedParams snapshot_;
  OracleConfig oracle_;
  TrainerConfig trainer_;
};

struct PretrainReport {
  int phase1_episodes = 0;
  double phase1_metric = 0.0;  // apples-remaining fraction or cleans per episode
  int phase2_episodes = 0;
};

// Two-phase pretraining: free-market training of the full network until the
// behavioral criterion holds (Harvest: overharvest; Clean Up: no cleaning),
// trunk freeze, then head training across the pretrain action grid.
PretrainedParams pretrain_oracle(const EnvModel& env, const TrainerConfig& trainer_config,
                                 const OracleConfig& oracle_config, Rng& rng,
                                 PretrainReport* report = nullptr);

// The 3-per-dimension lattice used for phase-2 pretraining.
std::vector<PrincipalAction> pretrain_action_grid(const ActionSpec& spec);

// Free-market behavior probes (sampled policies, one evaluation episode).
double harvest_remaining_fraction(const EnvModel& env, const GridPolicy& policy, Rng& rng);
double cleanup_cleans_per_episode(const EnvModel& env, const GridPolicy& policy, Rng& rng);

}  // namespace policylab
