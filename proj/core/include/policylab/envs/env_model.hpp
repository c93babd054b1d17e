#pragma once

#include <memory>
#include <span>
#include <vector>

#include "policylab/action.hpp"
#include "policylab/outcome.hpp"
#include "policylab/rng.hpp"

namespace policylab {

// One induced game M^phi: a sequential state machine rolled for a fixed
// number of steps. Instances are independent; one per rollout worker.
class Game {
 public:
  virtual ~Game() = default;

  virtual int n_agents() const = 0;
  virtual int obs_dim() const = 0;
  virtual int n_actions() const = 0;
  virtual int episode_len() const = 0;

  virtual void reset(Rng& rng) = 0;
  virtual void observe(int agent, std::span<double> out) const = 0;
  // Advances one step; fills per-agent raw and reward-modified values.
  virtual void step(std::span<const int> joint_action, Rng& rng,
                    std::span<double> raw, std::span<double> modified) = 0;
  virtual bool done() const = 0;

  // Valid once the episode has finished.
  virtual double principal_payoff() const = 0;
  virtual HistoricalObservation principal_observe() const = 0;
  // Per-step principal trace, channel-major: channels() blocks of
  // episode_len() values each (normalized roughly to O(1)).
  virtual std::vector<double> principal_trace() const = 0;
  virtual int trace_channels() const = 0;
};

// Static description of one environment: action space, context draws (CER's
// active lever), and game construction.
class EnvModel {
 public:
  virtual ~EnvModel() = default;

  virtual EnvKind kind() const = 0;
  virtual ActionSpec action_spec() const = 0;
  virtual int n_agents() const = 0;

  // CER draws an active lever per principal step; other envs have none.
  virtual int context_count() const { return 0; }
  virtual int draw_context(Rng& rng) const {
    (void)rng;
    return -1;
  }

  virtual std::unique_ptr<Game> make_game(const PrincipalAction& action,
                                          int context) const = 0;

  virtual int trace_channels() const = 0;
  virtual int episode_len() const = 0;

  // Rough payoff ceiling used for the report's triviality floor.
  virtual double optimum_estimate() const = 0;
};

// Averages counts across validation episodes (majority vote for CER's door).
HistoricalObservation aggregate_observations(
    const std::vector<HistoricalObservation>& observations);

// 16-point nearest-index downsample per channel of episode-averaged traces.
std::vector<double> downsample_trace(std::span<const double> trace, int channels,
                                     int episode_len, int points_per_channel = 16);

}  // namespace policylab
