#include "finstat/llm/provider.hpp"

#include <cctype>

namespace finstat::llm {

bool PromptBundle::empty() const {
  if (!system_text.empty()) return false;
  for (const auto& t : user_turns) {
    if (!t.empty()) return false;
  }
  return true;
}

std::string PromptBundle::concatenated() const {
  std::string out = system_text;
  for (const auto& t : user_turns) {
    if (!out.empty()) out += "\n\n";
    out += t;
  }
  return out;
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::transport: return "transport";
    case ErrorKind::auth: return "auth";
    case ErrorKind::rate_limited: return "rate_limited";
    case ErrorKind::no_script_match: return "no_script_match";
    case ErrorKind::bad_response: return "bad_response";
    case ErrorKind::invalid_request: return "invalid_request";
    case ErrorKind::exhausted: return "exhausted";
  }
  return "transport";
}

nlohmann::json to_json(const PromptBundle& bundle) {
  return {{"system_text", bundle.system_text},
          {"user_turns", bundle.user_turns},
          {"decoding", {{"temperature", bundle.decoding.temperature}, {"max_tokens", bundle.decoding.max_tokens}}}};
}

nlohmann::json to_json(const ModelReply& reply, bool include_latency) {
  nlohmann::json j = {{"text", reply.text},
                      {"provider_id", reply.provider_id},
                      {"token_usage", {{"prompt", reply.usage.prompt}, {"completion", reply.usage.completion}}}};
  if (include_latency) j["latency_ms"] = reply.latency.count();
  return j;
}

std::size_t approximate_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace finstat::llm
