#include "policylab/envs/cleanup.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace policylab {

namespace {
// stay, up, down, left, right, clean
constexpr int kDr[5] = {0, -1, 1, 0, 0};
constexpr int kDc[5] = {0, 0, 0, -1, 1};
constexpr int kClean = 5;
}  // namespace

void CleanupConfig::validate() const {
  if (n_agents < 1) throw std::invalid_argument("cleanup needs at least one agent");
  if (episode_len < 1) throw std::invalid_argument("episode_len must be >= 1");
  if (pollution_rate <= 0.0) throw std::invalid_argument("pollution_rate must be positive");
  if (pollution_max <= 0.0) throw std::invalid_argument("pollution_max must be positive");
  if (regrowth_base < 0.0 || regrowth_base > 1.0) {
    throw std::invalid_argument("regrowth_base must lie in [0,1]");
  }
  if (pollution_start < 0.0 || pollution_start > pollution_max) {
    throw std::invalid_argument("pollution_start must lie in [0, pollution_max]");
  }
}

CleanupGame::CleanupGame(CleanupConfig config, std::vector<double> incentives)
    : config_(std::move(config)), incentives_(std::move(incentives)) {
  config_.validate();
  if (incentives_.size() != 3) throw std::invalid_argument("cleanup expects three incentives");
  for (double v : incentives_) {
    if (!config_.incentive_bounds.contains(v)) {
      throw std::invalid_argument("incentive out of bounds");
    }
  }
  patch_cells_ = config_.map.cells_of('A');
  spawn_cells_ = config_.map.cells_of('S');
  if (static_cast<int>(spawn_cells_.size()) < config_.n_agents) {
    throw std::invalid_argument("map has fewer spawn cells than agents");
  }
  const int cells = config_.map.rows * config_.map.cols;
  river_adjacent_.assign(cells, 0);
  for (int r = 0; r < config_.map.rows; ++r) {
    for (int c = 0; c < config_.map.cols; ++c) {
      if (config_.map.at(r, c) == 'R') continue;
      for (int d = 0; d < 4; ++d) {
        const int nr = r + kDr[d + 1], nc = c + kDc[d + 1];
        if (config_.map.in_bounds(nr, nc) && config_.map.at(nr, nc) == 'R') {
          river_adjacent_[config_.map.index(r, c)] = 1;
          break;
        }
      }
    }
  }
  Rng dummy(0);
  reset(dummy);
}

int CleanupGame::obs_dim() const {
  const int side = 2 * config_.obs_radius + 1;
  return side * side * 3 + 1 + config_.n_agents + 3;
}

void CleanupGame::reset(Rng& rng) {
  (void)rng;
  const int cells = config_.map.rows * config_.map.cols;
  state_.pollution = config_.pollution_start;
  state_.apples.assign(cells, 0);
  for (int cell : patch_cells_) state_.apples[cell] = 1;
  state_.positions.assign(config_.n_agents, 0);
  for (int i = 0; i < config_.n_agents; ++i) state_.positions[i] = spawn_cells_[i];
  state_.harvest_count = 0;
  state_.clean_count = 0;
  state_.regrow_count = 0;
  state_.step = 0;
  occupied_.assign(cells, 0);
  for (int pos : state_.positions) occupied_[pos] = 1;
  cleans_by_step_.clear();
  regrows_by_step_.clear();
}

void CleanupGame::observe(int agent, std::span<double> out) const {
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
      if (config_.map.cells[ni] == 'R') out[2 * side * side + w] = 1.0;
    }
  }
  int off = side * side * 3;
  out[off] = state_.pollution / config_.pollution_max;
  out[off + 1 + agent] = 1.0;
  off += 1 + config_.n_agents;
  for (int d = 0; d < 3; ++d) {
    out[off + d] = incentives_[d] / std::max(1.0, config_.incentive_bounds.hi);
  }
}

double CleanupGame::regrow_probability() const {
  const double clean_frac = 1.0 - state_.pollution / config_.pollution_max;
  return config_.regrowth_base * std::max(0.0, clean_frac);
}

void CleanupGame::step(std::span<const int> joint_action, Rng& rng, std::span<double> raw,
                       std::span<double> modified) {
  if (static_cast<int>(joint_action.size()) != config_.n_agents) {
    throw std::invalid_argument("joint action size mismatch");
  }
  double cleaned = 0.0;
  long cleans_this_step = 0;
  // Action classes: 0 harvest, 1 clean, 2 other.
  std::vector<int> action_class(config_.n_agents, 2);

  for (int agent = 0; agent < config_.n_agents; ++agent) {
    const int a = joint_action[agent];
    if (a < 0 || a >= n_actions()) throw std::invalid_argument("invalid cleanup action");
    raw[agent] = 0.0;
    if (a == kClean) {
      if (river_adjacent_[state_.positions[agent]]) {
        raw[agent] = config_.clean_penalty;
        cleaned += config_.effective_clean_quantum();
        ++cleans_this_step;
        action_class[agent] = 1;
      }
      continue;
    }
    const int r = state_.positions[agent] / config_.map.cols;
    const int c = state_.positions[agent] % config_.map.cols;
    const int nr = r + kDr[a], nc = c + kDc[a];
    if (!config_.map.in_bounds(nr, nc) || config_.map.at(nr, nc) == 'R') continue;
    const int target = config_.map.index(nr, nc);
    if (target != state_.positions[agent] && !occupied_[target]) {
      occupied_[state_.positions[agent]] = 0;
      occupied_[target] = 1;
      state_.positions[agent] = target;
      if (state_.apples[target]) {
        state_.apples[target] = 0;
        raw[agent] = config_.harvest_reward;
        ++state_.harvest_count;
        action_class[agent] = 0;
      }
    }
  }
  state_.clean_count += cleans_this_step;

  for (int agent = 0; agent < config_.n_agents; ++agent) {
    modified[agent] = raw[agent] + incentives_[action_class[agent]];
  }

  state_.pollution = std::clamp(state_.pollution + config_.pollution_rate - cleaned, 0.0,
                                config_.pollution_max);

  long regrown = 0;
  const double p = regrow_probability();
  if (p > 0.0) {
    for (int cell : patch_cells_) {
      if (state_.apples[cell] || occupied_[cell]) continue;
      if (uniform_real(rng) < p) {
        state_.apples[cell] = 1;
        ++regrown;
      }
    }
  }
  state_.regrow_count += regrown;

  ++state_.step;
  cleans_by_step_.push_back(static_cast<double>(cleans_this_step));
  regrows_by_step_.push_back(static_cast<double>(regrown));
}

double CleanupGame::principal_payoff() const {
  return static_cast<double>(state_.harvest_count) / config_.n_agents;
}

HistoricalObservation CleanupGame::principal_observe() const {
  HistoricalObservation obs;
  obs.env = EnvKind::Cleanup;
  obs.payload = CleanupObs{static_cast<double>(state_.regrow_count),
                           static_cast<double>(state_.clean_count)};
  return obs;
}

std::vector<double> CleanupGame::principal_trace() const {
  const int T = config_.episode_len;
  std::vector<double> trace(static_cast<std::size_t>(2) * T, 0.0);
  for (int t = 0; t < static_cast<int>(cleans_by_step_.size()) && t < T; ++t) {
    trace[t] = cleans_by_step_[t] / config_.n_agents;
    trace[static_cast<std::size_t>(T) + t] = regrows_by_step_[t] / config_.n_agents;
  }
  return trace;
}

CleanupModel::CleanupModel(CleanupConfig config) : config_(std::move(config)) {
  config_.validate();
}

ActionSpec CleanupModel::action_spec() const {
  return ActionSpec::uniform(ActionKind::Incentives, 3, config_.incentive_bounds.lo,
                             config_.incentive_bounds.hi);
}

std::unique_ptr<Game> CleanupModel::make_game(const PrincipalAction& action, int context) const {
  (void)context;
  return std::make_unique<CleanupGame>(config_, action.values);
}

double CleanupModel::optimum_estimate() const {
  const double patch = 24.0;
  return patch * config_.regrowth_base * config_.episode_len / config_.n_agents * 0.5;
}

}  // namespace policylab
