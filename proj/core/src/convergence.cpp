#include "policylab/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace policylab {

namespace {
constexpr double kDivEps = 1e-6;
}

std::vector<double> ema_smooth(std::span<const double> series, double halflife) {
  std::vector<double> out(series.size());
  if (series.empty()) return out;
  if (halflife <= 0.0) {
    std::copy(series.begin(), series.end(), out.begin());
    return out;
  }
  const double decay = std::pow(0.5, 1.0 / halflife);
  out[0] = series[0];
  for (std::size_t i = 1; i < series.size(); ++i) {
    out[i] = decay * out[i - 1] + (1.0 - decay) * series[i];
  }
  return out;
}

ConvergenceReport detect_convergence(std::span<const double> series, long window,
                                     double threshold, double smoothing_halflife) {
  if (window < 2) throw std::invalid_argument("convergence window must be >= 2");
  if (series.empty()) throw std::invalid_argument("convergence series must be nonempty");

  ConvergenceReport report;
  report.window = window;
  report.threshold = threshold;
  const long n = static_cast<long>(series.size());
  if (n < window) return report;

  const std::vector<double> smoothed = ema_smooth(series, smoothing_halflife);

  // Max relative change over ordered pairs (i, j) in the window equals, for
  // each i, the distance to the window extremes over max(|x_i|, eps).
  for (long start = 0; start + window <= n; ++start) {
    double mn = smoothed[start], mx = smoothed[start];
    for (long k = start + 1; k < start + window; ++k) {
      mn = std::min(mn, smoothed[k]);
      mx = std::max(mx, smoothed[k]);
    }
    double max_rel = 0.0;
    for (long k = start; k < start + window; ++k) {
      const double x = smoothed[k];
      const double spread = std::max(x - mn, mx - x);
      max_rel = std::max(max_rel, spread / std::max(std::abs(x), kDivEps));
    }
    if (max_rel < threshold) {
      report.converged = true;
      report.convergence_timestep = start + window;
      report.payoff_at_convergence = smoothed[start + window - 1];
      return report;
    }
  }
  return report;
}

}  // namespace policylab
