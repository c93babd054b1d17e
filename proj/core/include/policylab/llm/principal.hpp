#pragma once

#include <memory>
#include <string>

#include "policylab/llm/client.hpp"
#include "policylab/llm/prompt.hpp"
#include "policylab/principal.hpp"

namespace policylab {

struct LlmRunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LlmPrincipalConfig {
  PromptToggles toggles;
  ActionFormat format = ActionFormat::DollarBrackets;
  int max_retries = 3;
  std::string transcript_path;  // empty disables the transcript
};

// In-context-learning principal: composes the context/history/query prompt,
// queries the client, parses the action, and appends the completed entry
// once the payoff and historical observation arrive.
class LlmPrincipal final : public Principal {
 public:
  LlmPrincipal(const EnvModel& env, std::shared_ptr<LlmClient> client,
               LlmPrincipalConfig config, std::uint64_t seed);

  PrincipalAction act(const StepContext& ctx, Rng& rng) override;
  void observe(const StepContext& ctx, const PrincipalAction& action,
               const EpisodeOutcome& outcome, std::span<const double> mean_trace) override;
  std::string name() const override { return "llm"; }
  nlohmann::json snapshot() const override;
  void restore(const nlohmann::json& j) override;

  const std::vector<PromptHistoryEntry>& history() const { return history_; }
  const PromptTemplate& prompt_template() const { return template_; }
  std::string last_prompt() const { return last_prompt_; }
  long responses_consumed() const { return responses_consumed_; }
  LlmClient& client() { return *client_; }

 private:
  void append_transcript(const std::string& kind, const std::string& text);

  EnvKind env_kind_;
  ActionSpec spec_;
  PromptTemplate template_;
  LlmPrincipalConfig config_;
  std::shared_ptr<LlmClient> client_;
  IrrelevantPool pool_;
  Rng snippet_rng_;
  std::vector<PromptHistoryEntry> history_;
  std::string last_prompt_;
  long responses_consumed_ = 0;
};

}  // namespace policylab
