#include "policylab/principal.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

namespace policylab {

nlohmann::json Principal::snapshot() const { return nlohmann::json(); }
void Principal::restore(const nlohmann::json&) {}

PrincipalAction ScriptedPrincipal::act(const StepContext& ctx, Rng& rng) {
  (void)ctx;
  (void)rng;
  if (cursor_ >= actions_.size()) {
    throw std::runtime_error("scripted principal exhausted at step " + std::to_string(cursor_));
  }
  return make_action(spec_, actions_[cursor_++]);
}

BanditPrincipal::BanditPrincipal(BanditKind kind, ActionSpec spec, ArmGrid grid,
                                 double parameter, NigParams prior)
    : kind_(kind), spec_(std::move(spec)), grid_(std::move(grid)) {
  switch (kind_) {
    case BanditKind::EpsGreedy:
      eps_.epsilon = parameter;
      eps_.init(grid_);
      break;
    case BanditKind::Ucb:
      ucb_.c = parameter;
      ucb_.init(grid_);
      break;
    case BanditKind::Thompson:
      thompson_.prior = prior;
      thompson_.init(grid_);
      break;
  }
}

int BanditPrincipal::table_index(const StepContext& ctx) const {
  if (grid_.contexts <= 1) return 0;
  if (ctx.context < 0 || ctx.context >= grid_.contexts) {
    throw std::invalid_argument("bandit context out of range");
  }
  return ctx.context;
}

PrincipalAction BanditPrincipal::act(const StepContext& ctx, Rng& rng) {
  const int table = table_index(ctx);
  switch (kind_) {
    case BanditKind::EpsGreedy: last_arm_ = eps_select(eps_, grid_, table, rng); break;
    case BanditKind::Ucb: last_arm_ = ucb_select(ucb_, grid_, table); break;
    case BanditKind::Thompson: last_arm_ = thompson_select(thompson_, table, rng); break;
  }
  std::vector<double> values;
  grid_.decode(last_arm_, values);
  return make_action(spec_, std::move(values));
}

void BanditPrincipal::observe(const StepContext& ctx, const PrincipalAction& action,
                              const EpisodeOutcome& outcome, std::span<const double>) {
  (void)action;
  const int table = table_index(ctx);
  if (last_arm_ < 0) throw std::logic_error("observe before act");
  switch (kind_) {
    case BanditKind::EpsGreedy: bandit_update(eps_.tables[table], last_arm_, outcome.payoff); break;
    case BanditKind::Ucb: bandit_update(ucb_.tables[table], last_arm_, outcome.payoff); break;
    case BanditKind::Thompson: {
      auto& arm = thompson_.tables[table][last_arm_];
      arm = nig_update(arm, outcome.payoff);
      break;
    }
  }
  last_arm_ = -1;
}

std::string BanditPrincipal::name() const {
  switch (kind_) {
    case BanditKind::EpsGreedy: return "eps_greedy";
    case BanditKind::Ucb: return "ucb";
    case BanditKind::Thompson: return "thompson";
  }
  return "bandit";
}

nlohmann::json BanditPrincipal::snapshot() const {
  nlohmann::json j;
  switch (kind_) {
    case BanditKind::EpsGreedy: j["eps"] = eps_.to_json(); break;
    case BanditKind::Ucb: j["ucb"] = ucb_.to_json(); break;
    case BanditKind::Thompson: j["thompson"] = thompson_.to_json(); break;
  }
  return j;
}

void BanditPrincipal::restore(const nlohmann::json& j) {
  switch (kind_) {
    case BanditKind::EpsGreedy: eps_ = EpsGreedyState::from_json(j.at("eps")); break;
    case BanditKind::Ucb: ucb_ = UcbState::from_json(j.at("ucb")); break;
    case BanditKind::Thompson: thompson_ = ThompsonState::from_json(j.at("thompson")); break;
  }
}

std::vector<double> build_macro_obs(int trace_channels, int episode_len,
                                    std::span<const double> mean_trace, int context_count,
                                    int context) {
  std::vector<double> obs;
  if (mean_trace.empty()) {
    obs.assign(static_cast<std::size_t>(trace_channels) * 16, 0.0);
  } else {
    obs = downsample_trace(mean_trace, trace_channels, episode_len);
  }
  if (context_count > 0) {
    std::vector<double> onehot(context_count, 0.0);
    if (context >= 0 && context < context_count) onehot[context] = 1.0;
    obs.insert(obs.end(), onehot.begin(), onehot.end());
  }
  return obs;
}

EconPrincipal::EconPrincipal(const EnvModel& env, EconConfig config, std::uint64_t seed)
    : spec_(env.action_spec()),
      config_(config),
      actor_opt_(config.lr, config.adam_eps),
      critic_opt_(config.lr, config.adam_eps),
      trace_channels_(env.trace_channels()),
      episode_len_(env.episode_len()),
      context_count_(env.context_count()) {
  Rng rng = make_rng(seed, "econ-init");
  const int obs_dim = trace_channels_ * 16 + context_count_;
  net_ = EconPrincipalNet::init(obs_dim, spec_, config_, rng);
}

PrincipalAction EconPrincipal::act(const StepContext& ctx, Rng& rng) {
  const std::vector<double> obs = build_macro_obs(trace_channels_, episode_len_, last_trace_,
                                                  context_count_, ctx.context);
  buffer_.emplace_back();
  return econ_act(net_, obs, spec_, config_, rng, &buffer_.back());
}

void EconPrincipal::observe(const StepContext& ctx, const PrincipalAction& action,
                            const EpisodeOutcome& outcome, std::span<const double> mean_trace) {
  (void)ctx;
  (void)action;
  if (buffer_.empty()) throw std::logic_error("observe before act");
  buffer_.back().payoff = outcome.payoff;
  last_trace_.assign(mean_trace.begin(), mean_trace.end());
  if (static_cast<int>(buffer_.size()) >= config_.update_interval) {
    Rng rng = make_rng(0, "econ-update");
    econ_update(net_, actor_opt_, critic_opt_, buffer_, config_, rng);
    buffer_.clear();
  }
}

nlohmann::json EconPrincipal::snapshot() const {
  nlohmann::json j;
  j["net"] = net_.to_json();
  j["last_trace"] = last_trace_;
  return j;
}

void EconPrincipal::restore(const nlohmann::json& j) {
  net_ = EconPrincipalNet::from_json(j.at("net"));
  last_trace_ = j.at("last_trace").get<std::vector<double>>();
  buffer_.clear();
}

MetaGradPrincipal::MetaGradPrincipal(std::shared_ptr<MetaGradDriver> driver, const EnvModel& env)
    : driver_(std::move(driver)),
      trace_channels_(env.trace_channels()),
      episode_len_(env.episode_len()),
      context_count_(env.context_count()) {}

PrincipalAction MetaGradPrincipal::act(const StepContext& ctx, Rng& rng) {
  (void)rng;
  const std::vector<double> obs = build_macro_obs(trace_channels_, episode_len_, last_trace_,
                                                  context_count_, ctx.context);
  return driver_->act(obs);
}

void MetaGradPrincipal::observe(const StepContext& ctx, const PrincipalAction& action,
                                const EpisodeOutcome& outcome,
                                std::span<const double> mean_trace) {
  (void)ctx;
  (void)action;
  (void)outcome;
  last_trace_.assign(mean_trace.begin(), mean_trace.end());
}

nlohmann::json MetaGradPrincipal::snapshot() const {
  nlohmann::json j = driver_->snapshot();
  j["last_trace"] = last_trace_;
  return j;
}

void MetaGradPrincipal::restore(const nlohmann::json& j) {
  driver_->restore(j);
  last_trace_ = j.at("last_trace").get<std::vector<double>>();
}

}  // namespace policylab
