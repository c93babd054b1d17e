#pragma once

#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "policylab/envs/cer.hpp"
#include "policylab/followers/oracle.hpp"

namespace policylab {

struct MetaGradConfig {
  int hidden = 64;
  int hidden_layers = 2;
  double lr = 3e-4;
  double agent_lr = 1e-3;        // inner SGD step size
  double incentive_cost = 0.0;   // optional L1 penalty on the meta objective
  double baseline_decay = 0.9;
  bool ablate_observations = false;
};

// Incentive function eta: an MLP with a sigmoid final activation scaled to
// the incentive range, so outputs stay strictly inside the bounds.
struct MetaIncentiveNet {
  Mlp body;
  ActionSpec spec;

  static MetaIncentiveNet init(int obs_dim, const ActionSpec& spec,
                               const MetaGradConfig& config, Rng& rng);
  std::vector<double> incentives(std::span<const double> obs) const;
  // Also fills jacobian[s] = d incentives[s] / d params.
  std::vector<double> incentives_with_jacobian(std::span<const double> obs,
                                               std::vector<std::vector<double>>& jacobian) const;

  nlohmann::json to_json() const;
  static MetaIncentiveNet from_json(const nlohmann::json& j);
};

struct MetaStepResult {
  double surrogate = 0.0;           // validation PG surrogate (maximized)
  double mean_id_return = 0.0;      // for the running-mean baseline
  double validation_payoff = 0.0;   // per-step joint raw reward
  std::vector<double> d_incentives; // dJ / d incentive-row
};

// One differentiable inner step: rolls a training episode under the
// incentive row, applies theta' = theta - alpha * grad L (keeping the reward
// pathway's dependence on the incentives), rolls a validation episode under
// theta', and differentiates the validation policy-gradient surrogate back
// to the incentive row. Agents are updated to theta' in place. The gradient
// flows through rewards only; observations are treated as constants.
MetaStepResult meta_inner_and_validate(const CerModel& env, int lever,
                                       std::vector<Mlp>& agents,
                                       std::span<const double> incentives,
                                       const TrainerConfig& agent_trainer, double agent_lr,
                                       double baseline, std::uint64_t rollout_seed,
                                       bool detach_incentives = false);

// MetaGrad principal driver (CER scope). Follower parameters persist across
// principal steps (single convergence episode, no resets); the meta update
// happens during best_response using the jacobian captured by act().
class MetaGradDriver final : public Oracle {
 public:
  MetaGradDriver(const CerModel& env, MetaGradConfig config, TrainerConfig agent_trainer,
                 std::uint64_t seed);

  int macro_obs_dim() const { return macro_obs_dim_; }
  PrincipalAction act(std::span<const double> macro_obs);
  std::shared_ptr<const JointPolicy> best_response(const EnvModel& env,
                                                   const PrincipalAction& action, int context,
                                                   std::uint64_t seed) override;

  double baseline() const { return baseline_; }
  const MetaIncentiveNet& net() const { return net_; }

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& j);

 private:
  CerConfig cer_;
  MetaGradConfig config_;
  TrainerConfig trainer_;
  MetaIncentiveNet net_;
  Adam opt_;
  std::vector<Mlp> agents_;
  double baseline_ = 0.0;
  int macro_obs_dim_ = 0;
  std::vector<std::vector<double>> last_jacobian_;
  bool have_pending_act_ = false;
};

}  // namespace policylab
