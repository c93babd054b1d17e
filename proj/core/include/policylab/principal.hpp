#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "policylab/action.hpp"
#include "policylab/bandit/bandit.hpp"
#include "policylab/envs/env_model.hpp"
#include "policylab/neural/econ.hpp"
#include "policylab/neural/metagrad.hpp"
#include "policylab/outcome.hpp"

namespace policylab {

struct StepContext {
  int step_index = 0;
  int context = -1;  // CER active lever for the upcoming episode
};

// A policymaker in the outer loop: commits to an action, then observes the
// resulting payoff and historical observation.
class Principal {
 public:
  virtual ~Principal() = default;
  virtual PrincipalAction act(const StepContext& ctx, Rng& rng) = 0;
  virtual void observe(const StepContext& ctx, const PrincipalAction& action,
                       const EpisodeOutcome& outcome, std::span<const double> mean_trace) = 0;
  virtual std::string name() const = 0;
  virtual nlohmann::json snapshot() const;
  virtual void restore(const nlohmann::json& j);
};

// Emits a fixed action sequence in order (errors past the end).
class ScriptedPrincipal final : public Principal {
 public:
  ScriptedPrincipal(ActionSpec spec, std::vector<std::vector<double>> actions)
      : spec_(std::move(spec)), actions_(std::move(actions)) {}
  PrincipalAction act(const StepContext& ctx, Rng& rng) override;
  void observe(const StepContext&, const PrincipalAction&, const EpisodeOutcome&,
               std::span<const double>) override {}
  std::string name() const override { return "scripted"; }

 private:
  ActionSpec spec_;
  std::vector<std::vector<double>> actions_;
  std::size_t cursor_ = 0;
};

class ConstantPrincipal final : public Principal {
 public:
  ConstantPrincipal(ActionSpec spec, std::vector<double> values)
      : spec_(std::move(spec)), values_(std::move(values)) {}
  PrincipalAction act(const StepContext&, Rng&) override { return make_action(spec_, values_); }
  void observe(const StepContext&, const PrincipalAction&, const EpisodeOutcome&,
               std::span<const double>) override {}
  std::string name() const override { return "constant"; }

 private:
  ActionSpec spec_;
  std::vector<double> values_;
};

enum class BanditKind { EpsGreedy, Ucb, Thompson };

class BanditPrincipal final : public Principal {
 public:
  BanditPrincipal(BanditKind kind, ActionSpec spec, ArmGrid grid, double parameter,
                  NigParams prior = {});
  PrincipalAction act(const StepContext& ctx, Rng& rng) override;
  void observe(const StepContext& ctx, const PrincipalAction& action,
               const EpisodeOutcome& outcome, std::span<const double>) override;
  std::string name() const override;
  nlohmann::json snapshot() const override;
  void restore(const nlohmann::json& j) override;

  const ArmGrid& grid() const { return grid_; }

 private:
  int table_index(const StepContext& ctx) const;

  BanditKind kind_;
  ActionSpec spec_;
  ArmGrid grid_;
  EpsGreedyState eps_;
  UcbState ucb_;
  ThompsonState thompson_;
  long last_arm_ = -1;
};

// Builds the neural principal's observation: per-channel downsampled mean
// trace of the previous step's validation episodes plus, for CER, the
// upcoming lever indicator.
std::vector<double> build_macro_obs(int trace_channels, int episode_len,
                                    std::span<const double> mean_trace, int context_count,
                                    int context);

class EconPrincipal final : public Principal {
 public:
  EconPrincipal(const EnvModel& env, EconConfig config, std::uint64_t seed);
  PrincipalAction act(const StepContext& ctx, Rng& rng) override;
  void observe(const StepContext& ctx, const PrincipalAction& action,
               const EpisodeOutcome& outcome, std::span<const double> mean_trace) override;
  std::string name() const override { return "econ"; }
  nlohmann::json snapshot() const override;
  void restore(const nlohmann::json& j) override;

  const EconPrincipalNet& net() const { return net_; }

 private:
  ActionSpec spec_;
  EconConfig config_;
  EconPrincipalNet net_;
  Adam actor_opt_, critic_opt_;
  std::vector<EconSample> buffer_;
  std::vector<double> last_trace_;
  int trace_channels_, episode_len_, context_count_;
};

class MetaGradPrincipal final : public Principal {
 public:
  MetaGradPrincipal(std::shared_ptr<MetaGradDriver> driver, const EnvModel& env);
  PrincipalAction act(const StepContext& ctx, Rng& rng) override;
  void observe(const StepContext& ctx, const PrincipalAction& action,
               const EpisodeOutcome& outcome, std::span<const double> mean_trace) override;
  std::string name() const override { return "metagrad"; }
  nlohmann::json snapshot() const override;
  void restore(const nlohmann::json& j) override;

 private:
  std::shared_ptr<MetaGradDriver> driver_;
  std::vector<double> last_trace_;
  int trace_channels_, episode_len_, context_count_;
};

}  // namespace policylab
