#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "policylab/followers/net.hpp"

namespace policylab {

// Frozen joint follower policy used during validation episodes.
class JointPolicy {
 public:
  virtual ~JointPolicy() = default;
  virtual int act(int agent, std::span<const double> obs, Rng& rng) const = 0;
};

// One softmax MLP per agent (CER: no parameter sharing).
class IndependentPolicy final : public JointPolicy {
 public:
  explicit IndependentPolicy(std::vector<Mlp> nets) : nets_(std::move(nets)) {}
  int act(int agent, std::span<const double> obs, Rng& rng) const override;
  const std::vector<Mlp>& nets() const { return nets_; }

 private:
  std::vector<Mlp> nets_;
};

// Shared trunk + actor/critic heads for Harvest and Clean Up. The trunk sees
// the window features and own scalar; heads additionally see the one-hot
// agent id and the current principal action, mirrored from the observation
// tail.
struct GridPolicy {
  Mlp trunk;   // obs[0..trunk_in) -> features (tanh output)
  Mlp actor;   // [features, obs tail] -> action logits
  Mlp critic;  // [features, obs tail] -> value
  int trunk_in = 0;

  static GridPolicy init(int obs_dim, int tail_dim, int n_actions, int feature_dim,
                         int head_hidden, Rng& rng);

  void logits_value(std::span<const double> obs, std::vector<double>& logits, double* value,
                    std::vector<double>& scratch) const;
  bool finite() const { return trunk.finite() && actor.finite() && critic.finite(); }

  nlohmann::json to_json() const;
  static GridPolicy from_json(const nlohmann::json& j);
};

class SharedGridJointPolicy final : public JointPolicy {
 public:
  explicit SharedGridJointPolicy(GridPolicy policy) : policy_(std::move(policy)) {}
  int act(int agent, std::span<const double> obs, Rng& rng) const override;
  const GridPolicy& policy() const { return policy_; }

 private:
  GridPolicy policy_;
};

// Fixed behavior, used by tests and the constant-action baselines.
class ScriptedJointPolicy final : public JointPolicy {
 public:
  using Fn = std::function<int(int agent, std::span<const double> obs, Rng& rng)>;
  explicit ScriptedJointPolicy(Fn fn) : fn_(std::move(fn)) {}
  int act(int agent, std::span<const double> obs, Rng& rng) const override {
    return fn_(agent, obs, rng);
  }

 private:
  Fn fn_;
};

// Samples an action from softmax logits.
int sample_policy_action(const Mlp& net, std::span<const double> obs, Rng& rng);

}  // namespace policylab
