#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace finstat::llm {

struct Decoding {
  double temperature = 0.0;
  std::size_t max_tokens = 1024;

  bool operator==(const Decoding&) const = default;
};

struct PromptBundle {
  std::string system_text;
  std::vector<std::string> user_turns;
  Decoding decoding;

  bool empty() const;
  // System text and user turns joined by blank lines; what script rules match against.
  std::string concatenated() const;

  bool operator==(const PromptBundle&) const = default;
};

struct TokenUsage {
  std::size_t prompt = 0;
  std::size_t completion = 0;
};

struct ModelReply {
  std::string text;
  std::string provider_id;
  std::chrono::milliseconds latency{0};
  TokenUsage usage;
};

enum class ErrorKind { transport, auth, rate_limited, no_script_match, bad_response, invalid_request, exhausted };

std::string_view to_string(ErrorKind kind);

// Typed provider or gateway failure. Only `transport` is retried.
class LlmError : public std::runtime_error {
 public:
  LlmError(ErrorKind kind, std::string provider, const std::string& message)
      : std::runtime_error(provider + " [" + std::string(to_string(kind)) + "]: " + message),
        kind_(kind),
        provider_(std::move(provider)),
        detail_(message) {}
  ErrorKind kind() const { return kind_; }
  const std::string& provider() const { return provider_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string provider_;
  std::string detail_;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string id() const = 0;
  // One attempt, no retries. Throws LlmError.
  virtual ModelReply complete(const PromptBundle& bundle, std::chrono::milliseconds timeout) = 0;
};

nlohmann::json to_json(const PromptBundle& bundle);
nlohmann::json to_json(const ModelReply& reply, bool include_latency);

// Whitespace-separated word count; the token estimate used by offline providers.
std::size_t approximate_tokens(std::string_view text);

}  // namespace finstat::llm
