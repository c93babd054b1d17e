#pragma once

#include <optional>
#include <string>
#include <vector>

#include "policylab/action.hpp"
#include "policylab/outcome.hpp"
#include "policylab/rng.hpp"

namespace policylab {

enum class ActionFormat { DollarBrackets, FinalRates, FinalIncentives };

std::string to_string(ActionFormat format);
ActionFormat action_format_from_string(const std::string& name);

struct PromptToggles {
  bool context = true;
  bool historical_obs = true;
  bool irrelevant = false;
};

// Env-specific prompt text blocks. The query states the arity and the
// numeric bounds of the expected action.
struct PromptTemplate {
  EnvKind env = EnvKind::Cer;
  ActionFormat format = ActionFormat::DollarBrackets;
  std::string context_text;
  std::string nocontext_text;
  std::string query_text;            // CER: contains {LIGHT}
  std::string nocontext_query_text;  // CER: contains {LIGHT} and {K}
};

PromptTemplate make_prompt_template(EnvKind env, const ActionSpec& spec, ActionFormat format,
                                    int cer_levers = 3);

struct PromptHistoryEntry {
  int index = 0;  // generation number, 1-based
  std::vector<double> action;
  double payoff = 0.0;
  std::string payoff_text;
  std::string observation_text;   // empty under the historical-obs ablation
  std::string irrelevant_snippet; // empty unless injection is enabled
  int cer_lever = -1;
};

// Deterministic, byte-stable prompt assembly: context (or unknown-function
// framing), one generation line per history entry, then the query.
std::string build_prompt(const PromptTemplate& tmpl,
                         const std::vector<PromptHistoryEntry>& history,
                         const PromptToggles& toggles, int light = -1, int next_index = 1);

// Fixed per-env phrasing with rounded counts.
std::string render_observation(const HistoricalObservation& obs);
std::string render_payoff(EnvKind env, double payoff);

struct ParsedAction {
  PrincipalAction action;
  bool clamped = false;
  std::string note;
};

// Finds the format marker (a $...$ pair or the FINAL RATES / FINAL
// INCENTIVES phrase); on a miss falls back to the last bracketed list of
// exactly `arity` numbers. Out-of-bounds values are clamped and noted.
std::optional<ParsedAction> parse_action(const std::string& response, const ActionSpec& spec,
                                         ActionFormat format);

// Uniform draw from a fixed snippet pool.
class IrrelevantPool {
 public:
  IrrelevantPool();  // built-in sentences
  static IrrelevantPool from_file(const std::string& path);

  const std::string& draw(Rng& rng) const;
  bool contains(const std::string& snippet) const;
  const std::vector<std::string>& snippets() const { return snippets_; }

 private:
  std::vector<std::string> snippets_;
};

}  // namespace policylab
