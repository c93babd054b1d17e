#include "policylab/outcome.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace policylab {

using nlohmann::json;

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::Harvest: return "harvest";
    case EnvKind::Cleanup: return "cleanup";
    case EnvKind::Cer: return "cer";
  }
  return "unknown";
}

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "harvest") return EnvKind::Harvest;
  if (name == "cleanup") return EnvKind::Cleanup;
  if (name == "cer") return EnvKind::Cer;
  throw std::invalid_argument("unknown environment: " + name);
}

bool HistoricalObservation::valid(double tol, int agent_count) const {
  switch (env) {
    case EnvKind::Harvest: {
      const auto* h = std::get_if<HarvestObs>(&payload);
      return h && h->apples_remaining >= 0.0;
    }
    case EnvKind::Cleanup: {
      const auto* c = std::get_if<CleanupObs>(&payload);
      return c && c->apples_regrown >= 0.0 && c->clean_actions >= 0.0;
    }
    case EnvKind::Cer: {
      const auto* c = std::get_if<CerObs>(&payload);
      if (!c || c->active_lever < 0) return false;
      double sum = std::accumulate(c->mean_agents_per_state.begin(),
                                   c->mean_agents_per_state.end(), 0.0);
      if (agent_count >= 0 && std::abs(sum - agent_count) > tol) return false;
      for (double v : c->mean_agents_per_state) {
        if (v < 0.0) return false;
      }
      return true;
    }
  }
  return false;
}

json HistoricalObservation::to_json() const {
  json j;
  j["env"] = policylab::to_string(env);
  switch (env) {
    case EnvKind::Harvest: {
      const auto& h = std::get<HarvestObs>(payload);
      j["apples_remaining"] = h.apples_remaining;
      break;
    }
    case EnvKind::Cleanup: {
      const auto& c = std::get<CleanupObs>(payload);
      j["apples_regrown"] = c.apples_regrown;
      j["clean_actions"] = c.clean_actions;
      break;
    }
    case EnvKind::Cer: {
      const auto& c = std::get<CerObs>(payload);
      j["door_opened"] = c.door_opened;
      j["active_lever"] = c.active_lever;
      j["mean_agents_per_state"] = c.mean_agents_per_state;
      break;
    }
  }
  return j;
}

HistoricalObservation HistoricalObservation::from_json(const json& j) {
  HistoricalObservation obs;
  obs.env = env_kind_from_string(j.at("env").get<std::string>());
  switch (obs.env) {
    case EnvKind::Harvest:
      obs.payload = HarvestObs{j.at("apples_remaining").get<double>()};
      break;
    case EnvKind::Cleanup:
      obs.payload = CleanupObs{j.at("apples_regrown").get<double>(),
                               j.at("clean_actions").get<double>()};
      break;
    case EnvKind::Cer: {
      CerObs c;
      c.door_opened = j.at("door_opened").get<bool>();
      c.active_lever = j.at("active_lever").get<int>();
      c.mean_agents_per_state = j.at("mean_agents_per_state").get<std::vector<double>>();
      obs.payload = c;
      break;
    }
  }
  return obs;
}

json step_to_json(const RunStep& step) {
  json j;
  j["step"] = step.step_index;
  j["action"] = step.action.values;
  j["payoff"] = step.outcome.payoff;
  j["obs"] = step.outcome.observation.to_json();
  j["val_timesteps"] = step.outcome.validation_timesteps;
  j["per_episode_payoffs"] = step.outcome.per_episode_payoffs;
  return j;
}

RunStep step_from_json(const json& j) {
  RunStep step;
  step.step_index = j.at("step").get<int>();
  step.action.values = j.at("action").get<std::vector<double>>();
  step.outcome.payoff = j.at("payoff").get<double>();
  step.outcome.observation = HistoricalObservation::from_json(j.at("obs"));
  step.outcome.validation_timesteps = j.at("val_timesteps").get<long>();
  if (j.contains("per_episode_payoffs")) {
    step.outcome.per_episode_payoffs = j.at("per_episode_payoffs").get<std::vector<double>>();
  }
  return step;
}

std::string RunRecord::to_jsonl() const {
  std::ostringstream out;
  for (const auto& step : steps) {
    out << step_to_json(step).dump() << '\n';
  }
  return out.str();
}

RunRecord RunRecord::from_jsonl(const std::string& text) {
  RunRecord record;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    record.steps.push_back(step_from_json(json::parse(line)));
  }
  return record;
}

}  // namespace policylab
