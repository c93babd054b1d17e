#pragma once

#include <memory>
#include <span>
#include <vector>

#include "policylab/envs/env_model.hpp"

namespace policylab {

// Contextual Escape Room: L lever states, a door state, and a start state.
// One lever is active per episode; the door is open at a step iff at least m
// agents occupy the active lever at that step.
struct CerConfig {
  int n = 5;            // agents
  int m = 2;            // required lever occupancy
  int L = 3;            // lever count
  int episode_len = 5;  // steps per episode
  Interval incentive_bounds{0.0, 5.0};
  // The incentive row is part of follower observations by default; the
  // meta-gradient checks train through the reward pathway alone.
  bool observe_incentives = true;

  int n_states() const { return L + 2; }
  int door_state() const { return L; }
  int start_state() const { return L + 1; }
  void validate() const;
};

struct CerState {
  std::vector<int> positions;  // per-agent state index
  int active_lever = 0;
  bool door_open = false;
  int step = 0;
};

CerState cer_reset(const CerConfig& config, int active_lever);

struct CerStepRewards {
  std::vector<double> raw;
  std::vector<double> modified;
};

// Moves every agent to its target state, recomputes the door, and scores:
// +10 at the door while open; 0 for standing still with the door closed;
// -1 otherwise. Modified adds the incentive of the state occupied.
CerStepRewards cer_step(CerState& state, std::span<const int> joint_action,
                        std::span<const double> incentive_row, const CerConfig& config);

// Cumulative joint raw reward per episode, averaged over each timestep.
double cer_principal_payoff(double total_raw_reward, int episode_len);

class CerGame final : public Game {
 public:
  CerGame(CerConfig config, std::vector<double> incentive_row, int active_lever);

  int n_agents() const override { return config_.n; }
  int obs_dim() const override { return 2 * config_.n_states() + 1; }
  int n_actions() const override { return config_.n_states(); }
  int episode_len() const override { return config_.episode_len; }

  void reset(Rng& rng) override;
  void observe(int agent, std::span<double> out) const override;
  void step(std::span<const int> joint_action, Rng& rng, std::span<double> raw,
            std::span<double> modified) override;
  bool done() const override { return state_.step >= config_.episode_len; }

  double principal_payoff() const override;
  HistoricalObservation principal_observe() const override;
  std::vector<double> principal_trace() const override;
  int trace_channels() const override { return 1 + config_.n_states(); }

  const CerState& state() const { return state_; }
  const CerConfig& config() const { return config_; }

 private:
  CerConfig config_;
  std::vector<double> incentive_row_;
  int active_lever_;
  CerState state_;
  double total_raw_ = 0.0;
  std::vector<double> occupancy_sums_;   // per state, summed over steps
  std::vector<double> door_by_step_;     // 0/1 per step
  std::vector<std::vector<double>> occupancy_by_step_;
  bool door_ever_open_ = false;
};

class CerModel final : public EnvModel {
 public:
  explicit CerModel(CerConfig config = {});

  EnvKind kind() const override { return EnvKind::Cer; }
  ActionSpec action_spec() const override;
  int n_agents() const override { return config_.n; }
  int context_count() const override { return config_.L; }
  int draw_context(Rng& rng) const override;
  std::unique_ptr<Game> make_game(const PrincipalAction& action, int context) const override;
  int trace_channels() const override { return 1 + config_.n_states(); }
  int episode_len() const override { return config_.episode_len; }
  double optimum_estimate() const override { return 10.0 * (config_.n - config_.m) - config_.m; }

  const CerConfig& config() const { return config_; }

 private:
  CerConfig config_;
};

}  // namespace policylab
