#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "policylab/envs/env_model.hpp"
#include "policylab/envs/gridmap.hpp"

namespace policylab {

// Commons Harvest on a small fixed grid: apple patches regrow in proportion
// to nearby unharvested apples and die permanently once a patch empties. The
// principal sets a three-tier tax on harvest rewards, redistributed evenly.
struct HarvestConfig {
  GridMap map = GridMap::parse(default_harvest_map());
  int n_agents = 7;
  int episode_len = 200;
  double regrowth_coeff = 0.05;                 // p, per nearby apple
  int neighborhood_radius = 2;                  // Chebyshev, same patch
  std::array<double, 3> tax_thresholds{0, 3, 6};  // tau, tau1 must be 0
  int window = 10;                              // H
  double alpha = 4.0;
  Interval tax_bounds{0.0, 1.0};
  int obs_radius = 2;

  void validate() const;
};

struct HarvestState {
  std::vector<std::uint8_t> apples;       // per cell
  std::vector<int> positions;             // per agent, cell index
  std::vector<std::vector<double>> recent_raw;  // per agent, ring of length <= H
  std::vector<int> ring_next;
  std::vector<int> ring_fill;
  std::vector<double> cumulative_raw;
  int step = 0;
};

// Tier index in {1,2,3} with tau_1 = 0 and a closed top bracket.
int bracket(double window_sum, const std::array<double, 3>& tau);

// tax_i = alpha * R[bracket(window_sum_i)] * raw_i; total tax redistributed
// evenly. Conserves the summed reward.
std::vector<double> harvest_tax(std::span<const double> raw,
                                std::span<const double> window_sums,
                                std::span<const double> rates, double alpha,
                                const std::array<double, 3>& tau);

class HarvestGame final : public Game {
 public:
  HarvestGame(HarvestConfig config, std::vector<double> tax_rates);

  int n_agents() const override { return config_.n_agents; }
  int obs_dim() const override;
  int n_actions() const override { return 5; }  // stay + 4-neighbor moves
  int episode_len() const override { return config_.episode_len; }

  void reset(Rng& rng) override;
  void observe(int agent, std::span<double> out) const override;
  void step(std::span<const int> joint_action, Rng& rng, std::span<double> raw,
            std::span<double> modified) override;
  bool done() const override { return state_.step >= config_.episode_len; }

  double principal_payoff() const override;
  HistoricalObservation principal_observe() const override;
  std::vector<double> principal_trace() const override;
  int trace_channels() const override { return 1; }

  // Regrows empty, unoccupied patch cells with probability min(1, p*k).
  void regrow(Rng& rng);

  int apples_remaining() const;
  int initial_apples() const { return initial_apples_; }
  const HarvestState& state() const { return state_; }
  const HarvestConfig& config() const { return config_; }
  double window_sum(int agent) const;

 private:
  HarvestConfig config_;
  std::vector<double> tax_rates_;
  HarvestState state_;
  int initial_apples_ = 0;
  std::vector<int> patch_label_;                 // -1 for non-patch cells
  std::vector<std::vector<int>> regrow_neighbors_;  // same-patch cells in radius
  std::vector<int> patch_cells_;
  std::vector<int> spawn_cells_;
  std::vector<double> apples_by_step_;
  std::vector<std::uint8_t> occupied_;
};

class HarvestModel final : public EnvModel {
 public:
  explicit HarvestModel(HarvestConfig config = {});

  EnvKind kind() const override { return EnvKind::Harvest; }
  ActionSpec action_spec() const override;
  int n_agents() const override { return config_.n_agents; }
  std::unique_ptr<Game> make_game(const PrincipalAction& action, int context) const override;
  int trace_channels() const override { return 1; }
  int episode_len() const override { return config_.episode_len; }
  double optimum_estimate() const override;

  const HarvestConfig& config() const { return config_; }

 private:
  HarvestConfig config_;
};

}  // namespace policylab
