#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "policylab/action.hpp"

namespace policylab {

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::string name() const = 0;
};

// Replays a fixed response sequence; exhausting it is a hard error that
// surfaces test misconfiguration.
class ScriptedClient final : public LlmClient {
 public:
  explicit ScriptedClient(std::vector<std::string> responses)
      : responses_(std::move(responses)) {}
  // One JSON object per line with a "response" field.
  static ScriptedClient from_file(const std::string& path);

  std::string complete(const std::string& prompt) override;
  std::string name() const override { return "scripted"; }
  std::size_t cursor() const { return cursor_; }
  // Fast-forwards past responses consumed by a resumed run.
  void skip(std::size_t count) { cursor_ += count; }

 private:
  std::vector<std::string> responses_;
  std::size_t cursor_ = 0;
};

// Deterministic rule-based CER client: reads the announced light and the
// generation history from the prompt text alone and coordinate-climbs toward
// a full incentive on the active lever. Exercises the complete loop without
// network access.
class HillClimbClient final : public LlmClient {
 public:
  explicit HillClimbClient(const ActionSpec& spec) : spec_(spec) {}
  std::string complete(const std::string& prompt) override;
  std::string name() const override { return "hill_climb"; }

 private:
  ActionSpec spec_;
};

struct LlmClientConfig {
  std::string endpoint;          // e.g. https://api.openai.com/v1/chat/completions
  std::string model;
  double temperature = 0.01;
  int max_retries = 3;
  int timeout_seconds = 60;
  std::string api_key_env = "POLICYLAB_API_KEY";
};

// JSON chat-completion client. The API key is read from the configured
// environment variable only; it never appears in config files or logs.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(LlmClientConfig config);
  std::string complete(const std::string& prompt) override;
  std::string name() const override { return "http:" + config_.model; }
  static bool has_api_key(const LlmClientConfig& config);

 private:
  LlmClientConfig config_;
  std::string host_;
  std::string path_;
  bool https_ = false;
};

}  // namespace policylab
