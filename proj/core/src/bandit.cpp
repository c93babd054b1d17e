#include "policylab/bandit/bandit.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace policylab {

int GridSpec::points() const {
  if (step <= 0.0 || end < start) throw std::invalid_argument("bad grid spec");
  return static_cast<int>(std::floor((end - start) / step + 1e-9)) + 1;
}

long ArmGrid::arm_count() const {
  long count = 1;
  for (const auto& d : dims) count *= d.points();
  return count;
}

void ArmGrid::decode(long arm, std::vector<double>& values) const {
  values.resize(dims.size());
  for (std::size_t d = 0; d < dims.size(); ++d) {
    const int p = dims[d].points();
    values[d] = dims[d].value(static_cast<int>(arm % p));
    arm /= p;
  }
}

long ArmGrid::encode(std::span<const double> values) const {
  if (values.size() != dims.size()) throw std::invalid_argument("arity mismatch");
  long arm = 0;
  long stride = 1;
  for (std::size_t d = 0; d < dims.size(); ++d) {
    const int p = dims[d].points();
    const int idx = static_cast<int>(std::lround((values[d] - dims[d].start) / dims[d].step));
    if (idx < 0 || idx >= p || std::abs(dims[d].value(idx) - values[d]) > 1e-9) {
      throw std::invalid_argument("value not on the arm lattice");
    }
    arm += stride * idx;
    stride *= p;
  }
  return arm;
}

ArmGrid ArmGrid::uniform(const GridSpec& per_dim, int arity, int contexts) {
  ArmGrid grid;
  grid.dims.assign(static_cast<std::size_t>(arity), per_dim);
  grid.contexts = contexts;
  return grid;
}

void ArmStats::init(long arms) {
  mean.assign(arms, 0.0);
  count.assign(arms, 0);
  total_pulls = 0;
}

void bandit_update(ArmStats& stats, long arm, double payoff) {
  ++stats.count[arm];
  ++stats.total_pulls;
  stats.mean[arm] += (payoff - stats.mean[arm]) / stats.count[arm];
}

void EpsGreedyState::init(const ArmGrid& grid) {
  tables.assign(grid.contexts, ArmStats{});
  for (auto& t : tables) t.init(grid.arm_count());
}

long eps_select(const EpsGreedyState& state, const ArmGrid& grid, int context, Rng& rng) {
  const ArmStats& table = state.tables.at(context);
  const long arms = grid.arm_count();
  if (arms < 1) throw std::invalid_argument("empty arm grid");
  if (uniform_real(rng) < state.epsilon) {
    return std::uniform_int_distribution<long>(0, arms - 1)(rng);
  }
  long best = 0;
  for (long a = 1; a < arms; ++a) {
    if (table.mean[a] > table.mean[best]) best = a;
  }
  return best;
}

void UcbState::init(const ArmGrid& grid) {
  tables.assign(grid.contexts, ArmStats{});
  for (auto& t : tables) t.init(grid.arm_count());
}

long ucb_select(const UcbState& state, const ArmGrid& grid, int context) {
  const ArmStats& table = state.tables.at(context);
  const long arms = grid.arm_count();
  for (long a = 0; a < arms; ++a) {
    if (table.count[a] == 0) return a;  // initialization pulls
  }
  const double log_t = std::log(static_cast<double>(table.total_pulls));
  long best = 0;
  double best_index = -1e300;
  for (long a = 0; a < arms; ++a) {
    const double index =
        table.mean[a] + state.c * std::sqrt(2.0 * log_t / static_cast<double>(table.count[a]));
    if (index > best_index) {
      best_index = index;
      best = a;
    }
  }
  return best;
}

NigParams nig_update(const NigParams& p, double y) {
  if (!std::isfinite(y)) throw std::invalid_argument("payoff must be finite");
  NigParams out;
  out.mu = (p.nu * p.mu + y) / (p.nu + 1.0);
  out.nu = p.nu + 1.0;
  out.alpha = p.alpha + 0.5;
  out.beta = p.beta + p.nu * (y - p.mu) * (y - p.mu) / (2.0 * (p.nu + 1.0));
  return out;
}

void ThompsonState::init(const ArmGrid& grid) {
  tables.assign(grid.contexts, std::vector<NigParams>(grid.arm_count(), prior));
}

long thompson_select(const ThompsonState& state, int context, Rng& rng) {
  const auto& table = state.tables.at(context);
  long best = 0;
  double best_draw = -1e300;
  for (std::size_t a = 0; a < table.size(); ++a) {
    const NigParams& p = table[a];
    std::gamma_distribution<double> gamma(p.alpha, 1.0 / p.beta);
    const double precision = gamma(rng);               // 1/sigma^2
    const double sigma2 = 1.0 / std::max(precision, 1e-300);
    std::normal_distribution<double> normal(p.mu, std::sqrt(sigma2 / p.nu));
    const double draw = normal(rng);
    if (draw > best_draw) {
      best_draw = draw;
      best = static_cast<long>(a);
    }
  }
  return best;
}

namespace {

nlohmann::json stats_to_json(const ArmStats& s) {
  return nlohmann::json{{"mean", s.mean}, {"count", s.count}, {"total", s.total_pulls}};
}

ArmStats stats_from_json(const nlohmann::json& j) {
  ArmStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.count = j.at("count").get<std::vector<long>>();
  s.total_pulls = j.at("total").get<long>();
  return s;
}

}  // namespace

nlohmann::json EpsGreedyState::to_json() const {
  nlohmann::json tabs = nlohmann::json::array();
  for (const auto& t : tables) tabs.push_back(stats_to_json(t));
  return nlohmann::json{{"epsilon", epsilon}, {"tables", tabs}};
}

EpsGreedyState EpsGreedyState::from_json(const nlohmann::json& j) {
  EpsGreedyState s;
  s.epsilon = j.at("epsilon").get<double>();
  for (const auto& t : j.at("tables")) s.tables.push_back(stats_from_json(t));
  return s;
}

nlohmann::json UcbState::to_json() const {
  nlohmann::json tabs = nlohmann::json::array();
  for (const auto& t : tables) tabs.push_back(stats_to_json(t));
  return nlohmann::json{{"c", c}, {"tables", tabs}};
}

UcbState UcbState::from_json(const nlohmann::json& j) {
  UcbState s;
  s.c = j.at("c").get<double>();
  for (const auto& t : j.at("tables")) s.tables.push_back(stats_from_json(t));
  return s;
}

nlohmann::json ThompsonState::to_json() const {
  nlohmann::json tabs = nlohmann::json::array();
  for (const auto& table : tables) {
    nlohmann::json arms = nlohmann::json::array();
    for (const auto& p : table) arms.push_back({p.mu, p.nu, p.alpha, p.beta});
    tabs.push_back(arms);
  }
  return nlohmann::json{
      {"prior", {prior.mu, prior.nu, prior.alpha, prior.beta}}, {"tables", tabs}};
}

ThompsonState ThompsonState::from_json(const nlohmann::json& j) {
  ThompsonState s;
  const auto& pr = j.at("prior");
  s.prior = NigParams{pr[0], pr[1], pr[2], pr[3]};
  for (const auto& table : j.at("tables")) {
    std::vector<NigParams> arms;
    for (const auto& p : table) arms.push_back(NigParams{p[0], p[1], p[2], p[3]});
    s.tables.push_back(std::move(arms));
  }
  return s;
}

}  // namespace policylab
