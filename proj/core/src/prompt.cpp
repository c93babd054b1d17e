#include "policylab/llm/prompt.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "policylab/numfmt.hpp"

namespace policylab {

std::string to_string(ActionFormat format) {
  switch (format) {
    case ActionFormat::DollarBrackets: return "dollar_brackets";
    case ActionFormat::FinalRates: return "final_rates";
    case ActionFormat::FinalIncentives: return "final_incentives";
  }
  return "unknown";
}

ActionFormat action_format_from_string(const std::string& name) {
  if (name == "dollar_brackets") return ActionFormat::DollarBrackets;
  if (name == "final_rates") return ActionFormat::FinalRates;
  if (name == "final_incentives") return ActionFormat::FinalIncentives;
  throw std::invalid_argument("unknown action format: " + name);
}

namespace {

std::string replace_all(std::string text, const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

std::string bound_str(double v) {
  if (v == static_cast<long long>(v)) return std::to_string(static_cast<long long>(v));
  return format_real(v);
}

std::string format_clause(ActionFormat format, const std::string& noun,
                          const std::string& item, const std::string& fields,
                          const std::string& lo, const std::string& hi,
                          const std::string& marker_phrase) {
  switch (format) {
    case ActionFormat::DollarBrackets:
      return "Please provide " + noun + " in the form $ [" + fields + "] $ where each " + item +
             " must be a floating point value between " + lo + " and " + hi +
             " inclusive. Do not forget the brackets, the commas, and the dollar signs.";
    case ActionFormat::FinalRates:
    case ActionFormat::FinalIncentives:
      return "Each " + item + " must be a floating point value between " + lo + " and " + hi +
             " inclusive. Follow this format: " + marker_phrase + ": [" + fields + "].";
  }
  return "";
}

}  // namespace

PromptTemplate make_prompt_template(EnvKind env, const ActionSpec& spec, ActionFormat format,
                                    int cer_levers) {
  PromptTemplate t;
  t.env = env;
  t.format = format;
  const std::string lo = bound_str(spec.bounds.front().lo);
  const std::string hi = bound_str(spec.bounds.front().hi);
  const std::string marker =
      format == ActionFormat::FinalIncentives ? "FINAL INCENTIVES" : "FINAL RATES";

  switch (env) {
    case EnvKind::Harvest: {
      t.context_text =
          "You are overseeing agents in a MARL environment. These agents populate an "
          "environment that contains apples, and are rewarded when they harvest an apple. "
          "However, if all of the apples are harvested before they can regrow, the environment "
          "will be barren for the rest of the episode and the agents will be unable to increase "
          "their return. Without any tax rates, the agents overharvest, leaving none to regrow "
          "and getting a low mean return. You are charged with creating tax rates that will "
          "affect the reward signal for an agent harvesting an apple. Each 'taxed' reward will "
          "be redistributed evenly amongst all of the agents. Your goal is to maximize the mean "
          "return of the agents. The following history of your previous attempts tells you the "
          "attempt number, the three-tiered tax rate you previously generated for that attempt, "
          "and the approximate mean income that the tax rate resulted in, as well as other data "
          "that might be pertinent.";
      t.query_text =
          "Now you will generate the next tax rate to be implemented in the environment, with "
          "the goal of maximizing the mean return of the agents. " +
          format_clause(format, "this tax rate", "tax rate", "tax1, tax2, tax3", lo, hi, marker) +
          " Before you generate the tax rate, please explain your rationale behind choosing it "
          "(so the tax rate should be the last thing that you generate).";
      t.nocontext_text =
          "You are attempting to maximize an unknown function w(x,y,z). You will provide a set "
          "of inputs (x,y,z), each between " + lo + " and " + hi +
          ", to the function and observe the output. Below, you are given the history of your "
          "previous attempts.";
      t.nocontext_query_text =
          format_clause(format, "the next set of inputs", "input", "x, y, z", lo, hi, marker) +
          " Before you generate the inputs, please explain your rationale behind choosing them "
          "(so the inputs should be the last thing that you generate).";
      break;
    }
    case EnvKind::Cleanup: {
      t.context_text =
          "You are overseeing agents in a MARL environment. These agents populate an "
          "environment that contains apples, and receive a reward of 0.1 when they harvest an "
          "apple. There is also a river in the environment that builds pollution at a steady "
          "rate. The apples can regrow, but do so more slowly if the river is polluted. You "
          "will produce 3 modifiers to be implemented in an episode of this environment. Agents "
          "that harvest an apple will see a reward signal of (0.1 + modifier1), agents that "
          "clean the pollution will see a reward signal of (-1 + modifier2), and agents that do "
          "some other action will see a reward signal of (0 + modifier3). Your goal is to "
          "maximize the mean number of apples harvested. Below, you are given the history of "
          "your previous attempts.";
      t.query_text =
          "Now you will generate the next set of modifiers to be implemented in the "
          "environment. " +
          format_clause(format, "this set of modifiers", "modifier",
                        "modifier1, modifier2, modifier3", lo, hi, marker) +
          " Before you generate the modifiers, please explain your rationale behind choosing it "
          "(so the modifiers should be the last thing that you generate).";
      t.nocontext_text =
          "You are attempting to maximize an unknown function w(x,y,z). You will provide inputs "
          "(x,y,z), each between " + lo + " and " + hi +
          ", to the function and observe the output. Below, you are given the history of your "
          "previous attempts.";
      t.nocontext_query_text =
          format_clause(format, "the next set of inputs", "input", "x, y, z", lo, hi, marker) +
          " Before you generate the inputs, please explain your rationale behind choosing them "
          "(so the inputs should be the last thing that you generate).";
      break;
    }
    case EnvKind::Cer: {
      const int states = spec.arity();
      std::string lever_list;
      std::string field_list;
      for (int l = 0; l < cer_levers; ++l) {
        lever_list += "lever " + std::to_string(l) + ", ";
        field_list += "lever " + std::to_string(l) + " incentive, ";
      }
      field_list += "door state incentive, start state incentive";
      t.context_text =
          "You are overseeing agents within a MARL environment. There are " +
          std::to_string(states) + " states in this environment -- " + lever_list +
          "the door, and the start. Agents are already given environmental rewards. You will "
          "be providing " + std::to_string(states) + " incentives, between " + lo + " and " +
          hi + ", to be added to the predefined episode rewards -- one for each lever, the "
          "door, and the start. Your goal is to maximize the total environmental rewards "
          "collected by the agents. A history of your previous attempts tells you the attempt "
          "number, the set of " + std::to_string(states) + " incentives you previously "
          "generated for that episode, and the outcome of that episode. Here is your history "
          "of attempts:";
      t.query_text =
          "We will now start a new episode. " +
          format_clause(format, "the incentives", "incentive", field_list, lo, hi, marker) +
          " Before you generate the next incentives, please explain the rationale behind your "
          "decision. A light is on above lever {LIGHT}.";
      std::string vars = states == 5 ? "v, w, x, y, z" : "x1, ..., x" + std::to_string(states);
      t.nocontext_text =
          "You are attempting to maximize an unknown function u(A, " + vars +
          "). Input A will be given to you and in response, you will provide inputs [" + vars +
          "], where each input must be a floating point value between " + lo + " and " + hi +
          " inclusive. You do not know anything at all about the rules of the function. Below, "
          "you are provided with a history of your attempts:";
      t.nocontext_query_text =
          "We will now try a new set of inputs. " +
          format_clause(format, "the inputs", "input", vars, lo, hi, marker) +
          " Before you generate the next inputs, please explain the rationale behind your "
          "decision. Attempt {K}: A = {LIGHT}.";
      break;
    }
  }
  return t;
}

std::string render_payoff(EnvKind env, double payoff) {
  switch (env) {
    case EnvKind::Harvest:
      return "mean apples: about " + std::to_string(round_count(payoff)) + ".";
    case EnvKind::Cleanup:
      return "Agents harvested about " + std::to_string(round_count(payoff)) + " apples each.";
    case EnvKind::Cer:
      return "The agents received a total reward per step of " + format_fixed(payoff, 1) + ".";
  }
  return "";
}

std::string render_observation(const HistoricalObservation& obs) {
  switch (obs.env) {
    case EnvKind::Harvest: {
      const auto& h = std::get<HarvestObs>(obs.payload);
      if (round_count(h.apples_remaining) >= 1) {
        return "Under this tax rate, apples remained unharvested at the end of the episode.";
      }
      return "";
    }
    case EnvKind::Cleanup: {
      const auto& c = std::get<CleanupObs>(obs.payload);
      return "Agents were able to clean roughly " + std::to_string(round_count(c.clean_actions)) +
             " times, and roughly " + std::to_string(round_count(c.apples_regrown)) +
             " apples grew back.";
    }
    case EnvKind::Cer: {
      const auto& c = std::get<CerObs>(obs.payload);
      std::string text = "The light was on above lever " + std::to_string(c.active_lever) +
                         ". The door " + (c.door_opened ? "opened." : "remained closed.");
      const int states = static_cast<int>(c.mean_agents_per_state.size());
      for (int s = 0; s < states; ++s) {
        const std::string count = format_fixed(c.mean_agents_per_state[s], 1);
        if (s < states - 2) {
          text += " " + count + " agents went to lever " + std::to_string(s) + ",";
        } else if (s == states - 2) {
          text += " " + count + " agents went to the door state,";
        } else {
          text += " and " + count + " agents went to the start.";
        }
      }
      return text;
    }
  }
  return "";
}

std::string build_prompt(const PromptTemplate& tmpl,
                         const std::vector<PromptHistoryEntry>& history,
                         const PromptToggles& toggles, int light, int next_index) {
  std::ostringstream out;
  const std::string light_str = std::to_string(light);
  if (toggles.context) {
    out << tmpl.context_text;
  } else {
    out << tmpl.nocontext_text;
  }
  for (const auto& entry : history) {
    out << "\n\n";
    if (toggles.context) {
      out << "Generation " << entry.index << ": " << format_real_list(entry.action) << " -> "
          << entry.payoff_text;
      if (toggles.historical_obs && !entry.observation_text.empty()) {
        out << " " << entry.observation_text;
      }
      if (!entry.irrelevant_snippet.empty()) {
        out << " " << entry.irrelevant_snippet;
      }
    } else if (tmpl.env == EnvKind::Cer) {
      out << "Attempt " << entry.index << ": A = " << entry.cer_lever << ". You chose inputs: "
          << format_real_list(entry.action) << ". The output was "
          << format_fixed(entry.payoff, 1) << ".";
    } else {
      out << "Generation " << entry.index << ": " << format_real_list(entry.action) << " -> ~ "
          << round_count(entry.payoff) << ".";
    }
  }
  out << "\n\n";
  std::string query = toggles.context ? tmpl.query_text : tmpl.nocontext_query_text;
  query = replace_all(query, "{LIGHT}", light_str);
  query = replace_all(query, "{K}", std::to_string(next_index));
  out << query;
  return out.str();
}

namespace {

// Parses "[a, b, c]" starting at text[open] == '['; returns values on success.
std::optional<std::vector<double>> parse_bracket_list(const std::string& text, std::size_t open,
                                                      std::size_t* close_out = nullptr) {
  const std::size_t close = text.find(']', open);
  if (close == std::string::npos) return std::nullopt;
  std::vector<double> values;
  std::size_t pos = open + 1;
  while (pos < close) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos || comma > close) comma = close;
    std::string token = text.substr(pos, comma - pos);
    const char* begin = token.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) return std::nullopt;
    while (*end != '\0') {
      if (!std::isspace(static_cast<unsigned char>(*end))) return std::nullopt;
      ++end;
    }
    values.push_back(v);
    pos = comma + 1;
  }
  if (close_out) *close_out = close;
  if (values.empty()) return std::nullopt;
  return values;
}

std::optional<std::vector<double>> last_list_of_arity(const std::string& text, int arity,
                                                      std::size_t from, std::size_t to) {
  std::optional<std::vector<double>> found;
  std::size_t pos = from;
  while (pos < to) {
    const std::size_t open = text.find('[', pos);
    if (open == std::string::npos || open >= to) break;
    auto values = parse_bracket_list(text, open);
    if (values && static_cast<int>(values->size()) == arity) found = values;
    pos = open + 1;
  }
  return found;
}

}  // namespace

std::optional<ParsedAction> parse_action(const std::string& response, const ActionSpec& spec,
                                         ActionFormat format) {
  const int arity = spec.arity();
  std::optional<std::vector<double>> values;

  if (format == ActionFormat::DollarBrackets) {
    // Last $ ... $ span containing a list of the right arity.
    std::size_t pos = 0;
    while (true) {
      const std::size_t a = response.find('$', pos);
      if (a == std::string::npos) break;
      const std::size_t b = response.find('$', a + 1);
      if (b == std::string::npos) break;
      auto v = last_list_of_arity(response, arity, a, b);
      if (v) values = v;
      pos = b + 1;
    }
  } else {
    const std::string marker =
        format == ActionFormat::FinalRates ? "FINAL RATES" : "FINAL INCENTIVES";
    const std::size_t at = response.rfind(marker);
    if (at != std::string::npos) {
      const std::size_t open = response.find('[', at);
      if (open != std::string::npos) {
        auto v = parse_bracket_list(response, open);
        if (v && static_cast<int>(v->size()) == arity) values = v;
      }
    }
  }

  if (!values) {
    values = last_list_of_arity(response, arity, 0, response.size());
  }
  if (!values) return std::nullopt;

  ParsedAction parsed;
  parsed.action.kind = spec.kind;
  parsed.action.bounds = spec.bounds;
  parsed.action.values.resize(arity);
  for (int d = 0; d < arity; ++d) {
    const double raw = (*values)[d];
    const double clamped = spec.bounds[d].clamp(raw);
    parsed.action.values[d] = clamped;
    if (clamped != raw) {
      parsed.clamped = true;
      parsed.note += (parsed.note.empty() ? "" : "; ") + std::string("dimension ") +
                     std::to_string(d) + " clamped from " + format_real(raw) + " to " +
                     format_real(clamped);
    }
  }
  return parsed;
}

IrrelevantPool::IrrelevantPool() {
  snippets_ = {
      "George Washington knew better than to cut down an apple tree.",
      "Six agents wore red, and one wore yellow.",
      "Apples are a member of the rose family, like pears and plums.",
      "Happy birthday!",
      "A lever is a beam connected to the ground by a hinge or pivot, called a fulcrum.",
      "The weather stayed mild for the whole season.",
  };
}

IrrelevantPool IrrelevantPool::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snippet pool: " + path);
  IrrelevantPool pool;
  pool.snippets_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) pool.snippets_.push_back(line);
  }
  if (pool.snippets_.empty()) throw std::runtime_error("snippet pool is empty: " + path);
  return pool;
}

const std::string& IrrelevantPool::draw(Rng& rng) const {
  return snippets_[uniform_int(rng, 0, static_cast<int>(snippets_.size()) - 1)];
}

bool IrrelevantPool::contains(const std::string& snippet) const {
  for (const auto& s : snippets_) {
    if (s == snippet) return true;
  }
  return false;
}

}  // namespace policylab
