#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "policylab/action.hpp"
#include "policylab/rng.hpp"

namespace policylab {

// Per-dimension discretization [start, end, step], inclusive of the end when
// it lands on the lattice.
struct GridSpec {
  double start = 0.0;
  double end = 1.0;
  double step = 0.1;

  int points() const;
  double value(int index) const { return start + index * step; }
};

// Discretized action lattice with a total arm_id <-> action bijection and
// one independent arm table per context (CER keeps one per lever).
struct ArmGrid {
  std::vector<GridSpec> dims;
  int contexts = 1;

  long arm_count() const;
  void decode(long arm, std::vector<double>& values) const;
  long encode(std::span<const double> values) const;

  static ArmGrid uniform(const GridSpec& per_dim, int arity, int contexts = 1);
};

struct ArmStats {
  std::vector<double> mean;
  std::vector<long> count;
  long total_pulls = 0;

  void init(long arms);
};

// Incremental mean/count update shared by epsilon-greedy and UCB.
void bandit_update(ArmStats& stats, long arm, double payoff);

struct EpsGreedyState {
  double epsilon = 0.1;
  std::vector<ArmStats> tables;  // one per context

  void init(const ArmGrid& grid);
  nlohmann::json to_json() const;
  static EpsGreedyState from_json(const nlohmann::json& j);
};

// Uniform arm with probability epsilon, else argmax mean (ties to the
// lowest arm id).
long eps_select(const EpsGreedyState& state, const ArmGrid& grid, int context, Rng& rng);

struct UcbState {
  double c = 0.2;
  std::vector<ArmStats> tables;

  void init(const ArmGrid& grid);
  nlohmann::json to_json() const;
  static UcbState from_json(const nlohmann::json& j);
};

// One initialization pull per arm first, then argmax of
// mean + c * sqrt(2 ln t / n).
long ucb_select(const UcbState& state, const ArmGrid& grid, int context);

struct NigParams {
  double mu = 0.0;
  double nu = 0.05;
  double alpha = 1.0;
  double beta = 25.0;
};

// Conjugate normal-inverse-gamma posterior update for one observation.
NigParams nig_update(const NigParams& posterior, double payoff);

struct ThompsonState {
  NigParams prior;
  std::vector<std::vector<NigParams>> tables;  // per context, per arm

  void init(const ArmGrid& grid);
  nlohmann::json to_json() const;
  static ThompsonState from_json(const nlohmann::json& j);
};

// Samples sigma^2 ~ InvGamma(alpha, beta) then theta ~ N(mu, sigma^2/nu) per
// arm; picks the argmax draw.
long thompson_select(const ThompsonState& state, int context, Rng& rng);

}  // namespace policylab
