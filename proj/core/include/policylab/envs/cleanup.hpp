#pragma once

#include <memory>
#include <span>
#include <vector>

#include "policylab/envs/env_model.hpp"
#include "policylab/envs/gridmap.hpp"

namespace policylab {

// Clean Up: a river accumulates pollution at a constant rate; apples regrow
// in a single patch at a rate that falls linearly to zero as pollution
// saturates. Cleaning requires standing next to the river and costs -1. The
// principal adds one of three incentives per step by action class
// (harvest / clean / other).
struct CleanupConfig {
  GridMap map = GridMap::parse(default_cleanup_map());
  int n_agents = 7;
  int episode_len = 200;
  double pollution_rate = 0.01;   // units per step
  double pollution_max = 1.0;     // saturation
  double pollution_start = 0.25;
  double regrowth_base = 0.05;    // per empty patch cell at zero pollution
  double harvest_reward = 0.1;
  double clean_penalty = -1.0;
  double clean_quantum = 0.0;     // 0 -> pollution_rate*episode_len/120
  Interval incentive_bounds{0.0, 3.0};
  int obs_radius = 2;

  double effective_clean_quantum() const {
    return clean_quantum > 0.0 ? clean_quantum
                               : pollution_rate * episode_len / 120.0;
  }
  void validate() const;
};

struct CleanupState {
  double pollution = 0.0;
  std::vector<std::uint8_t> apples;
  std::vector<int> positions;
  long harvest_count = 0;
  long clean_count = 0;
  long regrow_count = 0;
  int step = 0;
};

class CleanupGame final : public Game {
 public:
  CleanupGame(CleanupConfig config, std::vector<double> incentives);

  int n_agents() const override { return config_.n_agents; }
  int obs_dim() const override;
  int n_actions() const override { return 6; }  // stay + moves + clean
  int episode_len() const override { return config_.episode_len; }

  void reset(Rng& rng) override;
  void observe(int agent, std::span<double> out) const override;
  void step(std::span<const int> joint_action, Rng& rng, std::span<double> raw,
            std::span<double> modified) override;
  bool done() const override { return state_.step >= config_.episode_len; }

  double principal_payoff() const override;
  HistoricalObservation principal_observe() const override;
  std::vector<double> principal_trace() const override;
  int trace_channels() const override { return 2; }  // cleans, regrowths

  const CleanupState& state() const { return state_; }
  const CleanupConfig& config() const { return config_; }
  double regrow_probability() const;

 private:
  CleanupConfig config_;
  std::vector<double> incentives_;
  CleanupState state_;
  std::vector<int> patch_cells_;
  std::vector<int> spawn_cells_;
  std::vector<std::uint8_t> river_adjacent_;
  std::vector<std::uint8_t> occupied_;
  std::vector<double> cleans_by_step_;
  std::vector<double> regrows_by_step_;
};

class CleanupModel final : public EnvModel {
 public:
  explicit CleanupModel(CleanupConfig config = {});

  EnvKind kind() const override { return EnvKind::Cleanup; }
  ActionSpec action_spec() const override;
  int n_agents() const override { return config_.n_agents; }
  std::unique_ptr<Game> make_game(const PrincipalAction& action, int context) const override;
  int trace_channels() const override { return 2; }
  int episode_len() const override { return config_.episode_len; }
  double optimum_estimate() const override;

  const CleanupConfig& config() const { return config_; }

 private:
  CleanupConfig config_;
};

}  // namespace policylab
