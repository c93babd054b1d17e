#include "policylab/envs/cer.hpp"

#include <algorithm>
#include <stdexcept>

namespace policylab {

void CerConfig::validate() const {
  if (n < m || m < 1) throw std::invalid_argument("CER requires n >= m >= 1");
  if (L < 1) throw std::invalid_argument("CER requires L >= 1");
  if (episode_len < 1) throw std::invalid_argument("CER requires episode_len >= 1");
}

CerState cer_reset(const CerConfig& config, int active_lever) {
  config.validate();
  if (active_lever < 0 || active_lever >= config.L) {
    throw std::invalid_argument("active lever out of range");
  }
  CerState state;
  state.positions.assign(config.n, config.start_state());
  state.active_lever = active_lever;
  state.door_open = false;
  state.step = 0;
  return state;
}

CerStepRewards cer_step(CerState& state, std::span<const int> joint_action,
                        std::span<const double> incentive_row, const CerConfig& config) {
  if (static_cast<int>(joint_action.size()) != config.n) {
    throw std::invalid_argument("joint action size mismatch");
  }
  if (static_cast<int>(incentive_row.size()) != config.n_states()) {
    throw std::invalid_argument("incentive row must have L+2 entries");
  }
  for (int agent = 0; agent < config.n; ++agent) {
    if (joint_action[agent] < 0 || joint_action[agent] >= config.n_states()) {
      throw std::invalid_argument("invalid target state index");
    }
  }
  for (double v : incentive_row) {
    if (!config.incentive_bounds.contains(v)) {
      throw std::invalid_argument("incentive out of bounds");
    }
  }

  std::vector<int> previous = state.positions;
  for (int agent = 0; agent < config.n; ++agent) state.positions[agent] = joint_action[agent];

  int lever_occupancy = 0;
  for (int pos : state.positions) {
    if (pos == state.active_lever) ++lever_occupancy;
  }
  state.door_open = lever_occupancy >= config.m;

  CerStepRewards rewards;
  rewards.raw.resize(config.n);
  rewards.modified.resize(config.n);
  for (int agent = 0; agent < config.n; ++agent) {
    const int pos = state.positions[agent];
    const bool moved = pos != previous[agent];
    double raw;
    if (pos == config.door_state() && state.door_open) {
      raw = 10.0;  // door payout wins over the move penalty
    } else if (!moved && !state.door_open) {
      raw = 0.0;
    } else {
      raw = -1.0;
    }
    rewards.raw[agent] = raw;
    rewards.modified[agent] = raw + incentive_row[pos];
  }
  ++state.step;
  return rewards;
}

double cer_principal_payoff(double total_raw_reward, int episode_len) {
  if (episode_len < 1) throw std::invalid_argument("episode_len must be >= 1");
  return total_raw_reward / episode_len;
}

CerGame::CerGame(CerConfig config, std::vector<double> incentive_row, int active_lever)
    : config_(config), incentive_row_(std::move(incentive_row)), active_lever_(active_lever) {
  config_.validate();
  if (static_cast<int>(incentive_row_.size()) != config_.n_states()) {
    throw std::invalid_argument("incentive row must have L+2 entries");
  }
  state_ = cer_reset(config_, active_lever_);
  occupancy_sums_.assign(config_.n_states(), 0.0);
}

void CerGame::reset(Rng& rng) {
  (void)rng;
  state_ = cer_reset(config_, active_lever_);
  total_raw_ = 0.0;
  occupancy_sums_.assign(config_.n_states(), 0.0);
  door_by_step_.clear();
  occupancy_by_step_.clear();
  door_ever_open_ = false;
}

void CerGame::observe(int agent, std::span<double> out) const {
  const int states = config_.n_states();
  if (static_cast<int>(out.size()) != obs_dim()) throw std::invalid_argument("obs buffer size");
  std::fill(out.begin(), out.end(), 0.0);
  out[state_.positions[agent]] = 1.0;
  if (config_.observe_incentives) {
    for (int s = 0; s < states; ++s) {
      out[states + s] = incentive_row_[s] / std::max(1.0, config_.incentive_bounds.hi);
    }
  }
  out[2 * states] = static_cast<double>(state_.step) / config_.episode_len;
}

void CerGame::step(std::span<const int> joint_action, Rng& rng, std::span<double> raw,
                   std::span<double> modified) {
  (void)rng;
  CerStepRewards rewards = cer_step(state_, joint_action, incentive_row_, config_);
  std::copy(rewards.raw.begin(), rewards.raw.end(), raw.begin());
  std::copy(rewards.modified.begin(), rewards.modified.end(), modified.begin());

  for (double r : rewards.raw) total_raw_ += r;
  std::vector<double> occ(config_.n_states(), 0.0);
  for (int pos : state_.positions) occ[pos] += 1.0;
  for (int s = 0; s < config_.n_states(); ++s) occupancy_sums_[s] += occ[s];
  occupancy_by_step_.push_back(std::move(occ));
  door_by_step_.push_back(state_.door_open ? 1.0 : 0.0);
  door_ever_open_ = door_ever_open_ || state_.door_open;
}

double CerGame::principal_payoff() const {
  return cer_principal_payoff(total_raw_, config_.episode_len);
}

HistoricalObservation CerGame::principal_observe() const {
  CerObs obs;
  obs.door_opened = door_ever_open_;
  obs.active_lever = active_lever_;
  obs.mean_agents_per_state.resize(config_.n_states());
  const double steps = std::max<std::size_t>(door_by_step_.size(), 1);
  for (int s = 0; s < config_.n_states(); ++s) {
    obs.mean_agents_per_state[s] = occupancy_sums_[s] / steps;
  }
  HistoricalObservation out;
  out.env = EnvKind::Cer;
  out.payload = obs;
  return out;
}

std::vector<double> CerGame::principal_trace() const {
  const int T = config_.episode_len;
  std::vector<double> trace(static_cast<std::size_t>(trace_channels()) * T, 0.0);
  for (int t = 0; t < static_cast<int>(door_by_step_.size()) && t < T; ++t) {
    trace[t] = door_by_step_[t];
    for (int s = 0; s < config_.n_states(); ++s) {
      trace[static_cast<std::size_t>(1 + s) * T + t] = occupancy_by_step_[t][s] / config_.n;
    }
  }
  return trace;
}

CerModel::CerModel(CerConfig config) : config_(config) { config_.validate(); }

ActionSpec CerModel::action_spec() const {
  return ActionSpec::uniform(ActionKind::CerIncentiveRow, config_.n_states(),
                             config_.incentive_bounds.lo, config_.incentive_bounds.hi);
}

int CerModel::draw_context(Rng& rng) const { return uniform_int(rng, 0, config_.L - 1); }

std::unique_ptr<Game> CerModel::make_game(const PrincipalAction& action, int context) const {
  if (context < 0 || context >= config_.L) throw std::invalid_argument("CER context (lever) required");
  return std::make_unique<CerGame>(config_, action.values, context);
}

}  // namespace policylab
