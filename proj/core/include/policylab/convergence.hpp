#pragma once

#include <optional>
#include <span>
#include <vector>

namespace policylab {

struct ConvergenceReport {
  bool converged = false;
  std::optional<long> convergence_timestep;
  std::optional<double> payoff_at_convergence;
  long window = 0;
  double threshold = 0.0;
};

// Exponential moving average; half-life in points.
std::vector<double> ema_smooth(std::span<const double> series, double halflife);

// Slides a window over the smoothed series and reports the first position
// where the maximum relative change within the window drops below the
// threshold. The timestep is the number of series entries consumed up to the
// window's end.
ConvergenceReport detect_convergence(std::span<const double> series, long window,
                                     double threshold = 0.05,
                                     double smoothing_halflife = 5.0);

}  // namespace policylab
