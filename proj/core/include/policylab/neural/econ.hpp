#pragma once

#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "policylab/action.hpp"
#include "policylab/bandit/bandit.hpp"
#include "policylab/followers/net.hpp"
#include "policylab/outcome.hpp"

namespace policylab {

struct EconConfig {
  int hidden = 128;
  int hidden_layers = 2;
  double lr = 5e-4;
  double entropy_coef = 0.2;
  double clip = 0.2;
  double value_clip = 0.2;
  double value_coef = 0.5;
  double grad_clip = 0.5;
  double adam_eps = 1e-5;
  int update_interval = 16;
  int update_epochs = 4;
  bool normalize_advantages = true;
  bool ablate_observations = false;  // overwrite inputs with ones
  GridSpec grid{0.0, 1.0, 0.05};

  static EconConfig for_env(EnvKind kind);
};

// Actor-critic principal with one categorical head per action dimension over
// that dimension's grid plus a NO-OP choice that repeats the previous value.
struct EconPrincipalNet {
  Mlp actor;   // obs -> concat of per-head logits
  Mlp critic;  // obs -> value
  std::vector<double> last_action;
  int arity = 0;
  int points = 0;  // grid points per head (head size = points + 1)

  static EconPrincipalNet init(int obs_dim, const ActionSpec& spec, const EconConfig& config,
                               Rng& rng);
  int head_size() const { return points + 1; }
  int noop_index() const { return points; }

  nlohmann::json to_json() const;
  static EconPrincipalNet from_json(const nlohmann::json& j);
};

struct EconSample {
  std::vector<double> obs;       // post-ablation observation actually fed
  std::vector<int> choices;      // per-head indices (may be NO-OP)
  double logprob_old = 0.0;
  double value_old = 0.0;
  double payoff = 0.0;           // full-episode social welfare
};

// Samples every head; NO-OP keeps the previous value for that dimension
// (grid minimum on the first step).
PrincipalAction econ_act(EconPrincipalNet& net, std::span<const double> observation,
                         const ActionSpec& spec, const EconConfig& config, Rng& rng,
                         EconSample* record = nullptr);

// PPO step over single-decision episodes whose return is the episode payoff.
void econ_update(EconPrincipalNet& net, Adam& actor_opt, Adam& critic_opt,
                 std::vector<EconSample>& batch, const EconConfig& config, Rng& rng);

// Full-batch loss / gradient for finite-difference checks.
double econ_loss(const EconPrincipalNet& net, const std::vector<EconSample>& batch,
                 const EconConfig& config);
void econ_gradient(const EconPrincipalNet& net, const std::vector<EconSample>& batch,
                   const EconConfig& config, std::span<double> actor_grad,
                   std::span<double> critic_grad);

}  // namespace policylab
