#include "policylab/envs/env_model.hpp"

#include <stdexcept>

namespace policylab {

HistoricalObservation aggregate_observations(
    const std::vector<HistoricalObservation>& observations) {
  if (observations.empty()) throw std::invalid_argument("no observations to aggregate");
  const EnvKind env = observations.front().env;
  HistoricalObservation out;
  out.env = env;
  const double n = static_cast<double>(observations.size());
  switch (env) {
    case EnvKind::Harvest: {
      HarvestObs acc;
      for (const auto& o : observations) acc.apples_remaining += std::get<HarvestObs>(o.payload).apples_remaining;
      acc.apples_remaining /= n;
      out.payload = acc;
      break;
    }
    case EnvKind::Cleanup: {
      CleanupObs acc;
      for (const auto& o : observations) {
        const auto& c = std::get<CleanupObs>(o.payload);
        acc.apples_regrown += c.apples_regrown;
        acc.clean_actions += c.clean_actions;
      }
      acc.apples_regrown /= n;
      acc.clean_actions /= n;
      out.payload = acc;
      break;
    }
    case EnvKind::Cer: {
      CerObs acc;
      const auto& first = std::get<CerObs>(observations.front().payload);
      acc.active_lever = first.active_lever;
      acc.mean_agents_per_state.assign(first.mean_agents_per_state.size(), 0.0);
      int open_votes = 0;
      for (const auto& o : observations) {
        const auto& c = std::get<CerObs>(o.payload);
        if (c.door_opened) ++open_votes;
        for (std::size_t i = 0; i < acc.mean_agents_per_state.size(); ++i) {
          acc.mean_agents_per_state[i] += c.mean_agents_per_state[i];
        }
      }
      for (double& v : acc.mean_agents_per_state) v /= n;
      acc.door_opened = 2 * open_votes > static_cast<int>(observations.size());
      out.payload = acc;
      break;
    }
  }
  return out;
}

std::vector<double> downsample_trace(std::span<const double> trace, int channels,
                                     int episode_len, int points_per_channel) {
  if (channels <= 0 || episode_len <= 0) throw std::invalid_argument("bad trace shape");
  if (static_cast<int>(trace.size()) != channels * episode_len) {
    throw std::invalid_argument("trace size does not match channels * episode_len");
  }
  std::vector<double> out(static_cast<std::size_t>(channels) * points_per_channel);
  for (int c = 0; c < channels; ++c) {
    for (int i = 0; i < points_per_channel; ++i) {
      const int src = static_cast<int>(static_cast<long>(i) * episode_len / points_per_channel);
      out[static_cast<std::size_t>(c) * points_per_channel + i] =
          trace[static_cast<std::size_t>(c) * episode_len + src];
    }
  }
  return out;
}

}  // namespace policylab
