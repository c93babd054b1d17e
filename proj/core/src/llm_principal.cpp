#include "policylab/llm/principal.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "policylab/envs/cer.hpp"

namespace policylab {

LlmPrincipal::LlmPrincipal(const EnvModel& env, std::shared_ptr<LlmClient> client,
                           LlmPrincipalConfig config, std::uint64_t seed)
    : env_kind_(env.kind()),
      spec_(env.action_spec()),
      config_(std::move(config)),
      client_(std::move(client)),
      snippet_rng_(make_rng(seed, "llm-snippets")) {
  const int levers = env.kind() == EnvKind::Cer
                         ? dynamic_cast<const CerModel&>(env).config().L
                         : 0;
  template_ = make_prompt_template(env_kind_, spec_, config_.format, levers);
}

void LlmPrincipal::append_transcript(const std::string& kind, const std::string& text) {
  if (config_.transcript_path.empty()) return;
  std::ofstream out(config_.transcript_path, std::ios::app);
  out << "=== " << kind << " ===\n" << text << "\n\n";
}

PrincipalAction LlmPrincipal::act(const StepContext& ctx, Rng& rng) {
  (void)rng;
  const int next_index = static_cast<int>(history_.size()) + 1;
  const std::string prompt =
      build_prompt(template_, history_, config_.toggles, ctx.context, next_index);
  last_prompt_ = prompt;

  std::string response;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    append_transcript("prompt step " + std::to_string(ctx.step_index) + " attempt " +
                          std::to_string(attempt),
                      prompt);
    response = client_->complete(prompt);
    ++responses_consumed_;
    append_transcript("response step " + std::to_string(ctx.step_index) + " attempt " +
                          std::to_string(attempt),
                      response);
    auto parsed = parse_action(response, spec_, config_.format);
    if (parsed) {
      if (parsed->clamped) {
        append_transcript("clamp step " + std::to_string(ctx.step_index), parsed->note);
      }
      return parsed->action;
    }
  }
  throw LlmRunError("no action of arity " + std::to_string(spec_.arity()) +
                    " parsed after " + std::to_string(config_.max_retries + 1) +
                    " attempts; last response: " + response);
}

void LlmPrincipal::observe(const StepContext& ctx, const PrincipalAction& action,
                           const EpisodeOutcome& outcome, std::span<const double>) {
  PromptHistoryEntry entry;
  entry.index = static_cast<int>(history_.size()) + 1;
  entry.action = action.values;
  entry.payoff = outcome.payoff;
  entry.payoff_text = render_payoff(env_kind_, outcome.payoff);
  entry.observation_text = render_observation(outcome.observation);
  entry.cer_lever = ctx.context;
  if (config_.toggles.irrelevant) {
    entry.irrelevant_snippet = pool_.draw(snippet_rng_);
  }
  history_.push_back(std::move(entry));
}

nlohmann::json LlmPrincipal::snapshot() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : history_) {
    entries.push_back({{"index", e.index},
                       {"action", e.action},
                       {"payoff", e.payoff},
                       {"payoff_text", e.payoff_text},
                       {"observation_text", e.observation_text},
                       {"irrelevant", e.irrelevant_snippet},
                       {"cer_lever", e.cer_lever}});
  }
  std::ostringstream rng_state;
  rng_state << snippet_rng_;
  return nlohmann::json{{"history", entries},
                        {"snippet_rng", rng_state.str()},
                        {"responses_consumed", responses_consumed_}};
}

void LlmPrincipal::restore(const nlohmann::json& j) {
  history_.clear();
  for (const auto& e : j.at("history")) {
    PromptHistoryEntry entry;
    entry.index = e.at("index").get<int>();
    entry.action = e.at("action").get<std::vector<double>>();
    entry.payoff = e.at("payoff").get<double>();
    entry.payoff_text = e.at("payoff_text").get<std::string>();
    entry.observation_text = e.at("observation_text").get<std::string>();
    entry.irrelevant_snippet = e.at("irrelevant").get<std::string>();
    entry.cer_lever = e.at("cer_lever").get<int>();
    history_.push_back(std::move(entry));
  }
  std::istringstream rng_state(j.at("snippet_rng").get<std::string>());
  rng_state >> snippet_rng_;
  responses_consumed_ = j.value("responses_consumed", 0L);
}

}  // namespace policylab
