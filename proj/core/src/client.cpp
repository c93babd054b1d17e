#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "policylab/llm/client.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "policylab/numfmt.hpp"

namespace policylab {

ScriptedClient ScriptedClient::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scripted client file: " + path);
  std::vector<std::string> responses;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    responses.push_back(j.at("response").get<std::string>());
  }
  return ScriptedClient(std::move(responses));
}

std::string ScriptedClient::complete(const std::string& prompt) {
  (void)prompt;
  if (cursor_ >= responses_.size()) {
    throw std::runtime_error("scripted client exhausted after " +
                             std::to_string(responses_.size()) + " responses");
  }
  return responses_[cursor_++];
}

namespace {

struct HistoryLine {
  std::vector<double> values;
  double payoff = 0.0;
  int light = -1;
};

std::vector<double> parse_list_at(const std::string& text, std::size_t open) {
  std::vector<double> values;
  const std::size_t close = text.find(']', open);
  if (close == std::string::npos) return values;
  std::size_t pos = open + 1;
  while (pos < close) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos || comma > close) comma = close;
    values.push_back(std::strtod(text.substr(pos, comma - pos).c_str(), nullptr));
    pos = comma + 1;
  }
  return values;
}

}  // namespace

std::string HillClimbClient::complete(const std::string& prompt) {
  const int arity = spec_.arity();
  const double lo = spec_.bounds.front().lo;
  const double hi = spec_.bounds.front().hi;

  int light = 0;
  const std::string light_key = "A light is on above lever ";
  if (const std::size_t at = prompt.rfind(light_key); at != std::string::npos) {
    light = std::atoi(prompt.c_str() + at + light_key.size());
  }

  // One climb per announced lever: start from the best attempt seen for that
  // lever, pin the lever incentive at the ceiling, and walk the remaining
  // coordinates down round-robin.
  std::vector<HistoryLine> same_light;
  int entries = 0;
  const std::string seen_key = "The light was on above lever ";
  std::size_t pos = 0;
  while ((pos = prompt.find("Generation ", pos)) != std::string::npos) {
    const std::size_t eol = prompt.find('\n', pos);
    const std::string line =
        prompt.substr(pos, eol == std::string::npos ? prompt.size() - pos : eol - pos);
    pos += 11;
    const std::size_t open = line.find('[');
    const std::size_t of = line.rfind("of ");
    if (open == std::string::npos || of == std::string::npos) continue;
    HistoryLine h;
    h.values = parse_list_at(line, open);
    h.payoff = std::strtod(line.c_str() + of + 3, nullptr);
    if (const std::size_t seen = line.find(seen_key); seen != std::string::npos) {
      h.light = std::atoi(line.c_str() + seen + seen_key.size());
    }
    if (static_cast<int>(h.values.size()) != arity) continue;
    ++entries;
    if (h.light == light) same_light.push_back(std::move(h));
  }

  std::vector<double> proposal(arity, (lo + hi) / 2.0);
  if (!same_light.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < same_light.size(); ++i) {
      if (same_light[i].payoff > same_light[best].payoff) best = i;
    }
    proposal = same_light[best].values;
    // Cumulative decay: by the fourth visit every off-lever coordinate has
    // reached the floor, so the proposal settles.
    const double decay = static_cast<double>(same_light.size()) * (hi - lo) / 4.0;
    for (int d = 0; d < arity; ++d) {
      if (d != light) proposal[d] = std::max(lo, proposal[d] - decay);
    }
  } else if (entries > 0) {
    // Unseen lever: spend everything on it and nothing elsewhere.
    std::fill(proposal.begin(), proposal.end(), lo);
  }
  if (light >= 0 && light < arity) proposal[light] = hi;

  std::ostringstream out;
  out << "The light marks the active lever, so I will keep its incentive at the maximum and "
         "reduce spending elsewhere.\n$ "
      << format_real_list(proposal) << " $";
  return out.str();
}

HttpLlmClient::HttpLlmClient(LlmClientConfig config) : config_(std::move(config)) {
  std::string rest = config_.endpoint;
  if (rest.rfind("https://", 0) == 0) {
    https_ = true;
    rest = rest.substr(8);
  } else if (rest.rfind("http://", 0) == 0) {
    rest = rest.substr(7);
  } else {
    throw std::invalid_argument("endpoint must start with http:// or https://");
  }
  const std::size_t slash = rest.find('/');
  host_ = slash == std::string::npos ? rest : rest.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : rest.substr(slash);
}

bool HttpLlmClient::has_api_key(const LlmClientConfig& config) {
  const char* key = std::getenv(config.api_key_env.c_str());
  return key != nullptr && key[0] != '\0';
}

std::string HttpLlmClient::complete(const std::string& prompt) {
  nlohmann::json body;
  body["model"] = config_.model;
  body["temperature"] = config_.temperature;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && key[0]) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::seconds(1L << (attempt - 1)));
    }
    httplib::Result res;
    if (https_) {
      httplib::SSLClient client(host_);
      client.set_read_timeout(config_.timeout_seconds, 0);
      client.set_connection_timeout(config_.timeout_seconds, 0);
      res = client.Post(path_, headers, payload, "application/json");
    } else {
      httplib::Client client(host_);
      client.set_read_timeout(config_.timeout_seconds, 0);
      client.set_connection_timeout(config_.timeout_seconds, 0);
      res = client.Post(path_, headers, payload, "application/json");
    }
    if (!res) {
      last_error = "transport failure (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      last_error = std::string("malformed completion payload: ") + e.what();
    }
  }
  throw TransportError("LLM endpoint unreachable: " + last_error);
}

}  // namespace policylab
