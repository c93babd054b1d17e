#include "policylab/envs/harvest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace policylab {

namespace {
// stay, up, down, left, right
constexpr int kDr[5] = {0, -1, 1, 0, 0};
constexpr int kDc[5] = {0, 0, 0, -1, 1};
}  // namespace

void HarvestConfig::validate() const {
  if (n_agents < 1) throw std::invalid_argument("harvest needs at least one agent");
  if (episode_len < 1) throw std::invalid_argument("episode_len must be >= 1");
  if (regrowth_coeff < 0.0 || regrowth_coeff > 1.0) {
    throw std::invalid_argument("regrowth coefficient must lie in [0,1]");
  }
  if (tax_thresholds[0] != 0.0 || !(tax_thresholds[0] < tax_thresholds[1] &&
                                    tax_thresholds[1] < tax_thresholds[2])) {
    throw std::invalid_argument("tax thresholds must satisfy 0 = tau1 < tau2 < tau3");
  }
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
}

int bracket(double window_sum, const std::array<double, 3>& tau) {
  if (window_sum >= tau[2]) return 3;
  if (window_sum >= tau[1]) return 2;
  return 1;
}

std::vector<double> harvest_tax(std::span<const double> raw,
                                std::span<const double> window_sums,
                                std::span<const double> rates, double alpha,
                                const std::array<double, 3>& tau) {
  const std::size_t n = raw.size();
  if (window_sums.size() != n) throw std::invalid_argument("window_sums size mismatch");
  if (rates.size() != 3) throw std::invalid_argument("three tax rates required");
  std::vector<double> modified(n);
  double total_tax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double tax = alpha * rates[bracket(window_sums[i], tau) - 1] * raw[i];
    modified[i] = raw[i] - tax;
    total_tax += tax;
  }
  const double share = total_tax / static_cast<double>(n);
  for (double& m : modified) m += share;
  return modified;
}

HarvestGame::HarvestGame(HarvestConfig config, std::vector<double> tax_rates)
    : config_(std::move(config)), tax_rates_(std::move(tax_rates)) {
  config_.validate();
  if (tax_rates_.size() != 3) throw std::invalid_argument("harvest expects three tax rates");
  for (double r : tax_rates_) {
    if (!config_.tax_bounds.contains(r)) throw std::invalid_argument("tax rate out of bounds");
  }
  patch_label_ = config_.map.label_components('A');
  patch_cells_ = config_.map.cells_of('A');
  spawn_cells_ = config_.map.cells_of('S');
  if (static_cast<int>(spawn_cells_.size()) < config_.n_agents) {
    throw std::invalid_argument("map has fewer spawn cells than agents");
  }
  initial_apples_ = static_cast<int>(patch_cells_.size());

  const int rad = config_.neighborhood_radius;
  regrow_neighbors_.resize(patch_cells_.size());
  for (std::size_t i = 0; i < patch_cells_.size(); ++i) {
    const int cell = patch_cells_[i];
    const int r = cell / config_.map.cols, c = cell % config_.map.cols;
    for (int dr = -rad; dr <= rad; ++dr) {
      for (int dc = -rad; dc <= rad; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int nr = r + dr, nc = c + dc;
        if (!config_.map.in_bounds(nr, nc)) continue;
        const int ni = config_.map.index(nr, nc);
        if (patch_label_[ni] == patch_label_[cell]) regrow_neighbors_[i].push_back(ni);
      }
    }
  }

  Rng dummy(0);
  reset(dummy);
}

int HarvestGame::obs_dim() const {
  const int side = 2 * config_.obs_radius + 1;
  return side * side * 3 + 1 + config_.n_agents + 3;
}

void HarvestGame::reset(Rng& rng) {
  (void)rng;
  const int cells = config_.map.rows * config_.map.cols;
  state_.apples.assign(cells, 0);
  for (int cell : patch_cells_) state_.apples[cell] = 1;
  state_.positions.assign(config_.n_agents, 0);
  for (int i = 0; i < config_.n_agents; ++i) state_.positions[i] = spawn_cells_[i];
  state_.recent_raw.assign(config_.n_agents, std::vector<double>(config_.window, 0.0));
  state_.ring_next.assign(config_.n_agents, 0);
  state_.ring_fill.assign(config_.n_agents, 0);
  state_.cumulative_raw.assign(config_.n_agents, 0.0);
  state_.step = 0;
  apples_by_step_.clear();
  occupied_.assign(cells, 0);
  for (int pos : state_.positions) occupied_[pos] = 1;
}

double HarvestGame::window_sum(int agent) const {
  const auto& ring = state_.recent_raw[agent];
  double sum = 0.0;
  for (int k = 0; k < state_.ring_fill[agent]; ++k) sum += ring[k];
  return sum;
}

void HarvestGame::observe(int agent, std::span<double> out) const {
  if (static_cast<int>(out.size()) != obs_dim()) throw std::invalid_argument("obs buffer size");
  std::fill(out.begin(), out.end(), 0.0);
  const int rad = config_.obs_radius;
  const int side = 2 * rad + 1;
  const int r0 = state_.positions[agent] / config_.map.cols;
  const int c0 = state_.positions[agent] % config_.map.cols;
  for (int dr = -rad; dr <= rad; ++dr) {
    for (int dc = -rad; dc <= rad; ++dc) {
      const int nr = r0 + dr, nc = c0 + dc;
      if (!config_.map.in_bounds(nr, nc)) continue;
      const int ni = config_.map.index(nr, nc);
      const int w = (dr + rad) * side + (dc + rad);
      if (state_.apples[ni]) out[w] = 1.0;
      if (occupied_[ni]) out[side * side + w] = 1.0;
      // third channel (river) stays zero in Harvest
    }
  }
  int off = side * side * 3;
  out[off] = window_sum(agent) / config_.window;
  out[off + 1 + agent] = 1.0;
  off += 1 + config_.n_agents;
  for (int d = 0; d < 3; ++d) {
    out[off + d] = tax_rates_[d] / std::max(1.0, config_.tax_bounds.hi);
  }
}

void HarvestGame::regrow(Rng& rng) {
  for (std::size_t i = 0; i < patch_cells_.size(); ++i) {
    const int cell = patch_cells_[i];
    if (state_.apples[cell] || occupied_[cell]) continue;
    int k = 0;
    for (int ncell : regrow_neighbors_[i]) k += state_.apples[ncell];
    if (k == 0) continue;
    const double p = std::min(1.0, config_.regrowth_coeff * k);
    if (uniform_real(rng) < p) state_.apples[cell] = 1;
  }
}

void HarvestGame::step(std::span<const int> joint_action, Rng& rng, std::span<double> raw,
                       std::span<double> modified) {
  if (static_cast<int>(joint_action.size()) != config_.n_agents) {
    throw std::invalid_argument("joint action size mismatch");
  }
  // Movement in agent-index priority; a blocked or off-grid move is a stay.
  for (int agent = 0; agent < config_.n_agents; ++agent) {
    const int a = joint_action[agent];
    if (a < 0 || a >= n_actions()) throw std::invalid_argument("invalid harvest action");
    raw[agent] = 0.0;
    const int r = state_.positions[agent] / config_.map.cols;
    const int c = state_.positions[agent] % config_.map.cols;
    const int nr = r + kDr[a], nc = c + kDc[a];
    if (!config_.map.in_bounds(nr, nc)) continue;
    const int target = config_.map.index(nr, nc);
    if (target != state_.positions[agent] && !occupied_[target]) {
      occupied_[state_.positions[agent]] = 0;
      occupied_[target] = 1;
      const bool harvested = state_.apples[target] != 0;
      state_.positions[agent] = target;
      raw[agent] = harvested ? 1.0 : 0.0;
      if (harvested) state_.apples[target] = 0;
    }
  }

  std::vector<double> sums(config_.n_agents);
  for (int agent = 0; agent < config_.n_agents; ++agent) {
    auto& ring = state_.recent_raw[agent];
    ring[state_.ring_next[agent]] = raw[agent];
    state_.ring_next[agent] = (state_.ring_next[agent] + 1) % config_.window;
    state_.ring_fill[agent] = std::min(state_.ring_fill[agent] + 1, config_.window);
    sums[agent] = window_sum(agent);
    state_.cumulative_raw[agent] += raw[agent];
  }

  const std::vector<double> mod =
      harvest_tax(raw, sums, tax_rates_, config_.alpha, config_.tax_thresholds);
  std::copy(mod.begin(), mod.end(), modified.begin());

  regrow(rng);
  ++state_.step;
  apples_by_step_.push_back(static_cast<double>(apples_remaining()) /
                            std::max(1, initial_apples_));
}

int HarvestGame::apples_remaining() const {
  int count = 0;
  for (int cell : patch_cells_) count += state_.apples[cell];
  return count;
}

double HarvestGame::principal_payoff() const {
  const double total =
      std::accumulate(state_.cumulative_raw.begin(), state_.cumulative_raw.end(), 0.0);
  return total / config_.n_agents;
}

HistoricalObservation HarvestGame::principal_observe() const {
  HistoricalObservation obs;
  obs.env = EnvKind::Harvest;
  obs.payload = HarvestObs{static_cast<double>(apples_remaining())};
  return obs;
}

std::vector<double> HarvestGame::principal_trace() const {
  std::vector<double> trace(config_.episode_len, 0.0);
  for (std::size_t t = 0; t < apples_by_step_.size() && t < trace.size(); ++t) {
    trace[t] = apples_by_step_[t];
  }
  return trace;
}

HarvestModel::HarvestModel(HarvestConfig config) : config_(std::move(config)) {
  config_.validate();
}

ActionSpec HarvestModel::action_spec() const {
  return ActionSpec::uniform(ActionKind::TaxRates, 3, config_.tax_bounds.lo,
                             config_.tax_bounds.hi);
}

std::unique_ptr<Game> HarvestModel::make_game(const PrincipalAction& action, int context) const {
  (void)context;
  return std::make_unique<HarvestGame>(config_, action.values);
}

double HarvestModel::optimum_estimate() const {
  // Sustainable-yield ballpark: every patch regrows a few apples per window.
  const double patches = 4.0;
  return patches * config_.regrowth_coeff * 4.0 * config_.episode_len / config_.n_agents;
}

}  // namespace policylab
