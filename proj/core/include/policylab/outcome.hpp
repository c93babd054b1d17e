#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "policylab/action.hpp"

namespace policylab {

enum class EnvKind { Harvest, Cleanup, Cer };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

// End-of-episode summaries reported to the principal. Counts may be
// fractional after averaging across validation episodes.
struct HarvestObs {
  double apples_remaining = 0.0;
};

struct CleanupObs {
  double apples_regrown = 0.0;
  double clean_actions = 0.0;
};

struct CerObs {
  bool door_opened = false;
  int active_lever = 0;
  std::vector<double> mean_agents_per_state;
};

struct HistoricalObservation {
  EnvKind env = EnvKind::Cer;
  std::variant<HarvestObs, CleanupObs, CerObs> payload;

  bool valid(double tol = 1e-9, int agent_count = -1) const;
  nlohmann::json to_json() const;
  static HistoricalObservation from_json(const nlohmann::json& j);
};

// Principal payoff averaged over validation episodes plus the aggregated
// historical observation.
struct EpisodeOutcome {
  double payoff = 0.0;
  HistoricalObservation observation;
  long validation_timesteps = 0;
  std::vector<double> per_episode_payoffs;
};

struct RunStep {
  int step_index = 0;
  PrincipalAction action;
  EpisodeOutcome outcome;
};

struct RunRecord {
  std::vector<RunStep> steps;
  std::uint64_t seed = 0;
  std::string config_digest;

  // One JSON object per step.
  std::string to_jsonl() const;
  static RunRecord from_jsonl(const std::string& text);
};

nlohmann::json step_to_json(const RunStep& step);
RunStep step_from_json(const nlohmann::json& j);

}  // namespace policylab
