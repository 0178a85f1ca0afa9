#include "finstat/llm/remote.hpp"

#include <sstream>

#include "finstat/core/text.hpp"

namespace finstat::llm {

RemoteProvider::RemoteProvider(RemoteProviderConfig config)
    : config_(std::move(config)), endpoint_(http::parse_endpoint(config_.base_url)) {
  if (config_.model.empty()) throw std::invalid_argument("remote provider '" + config_.id + "' needs a model");
}

nlohmann::json RemoteProvider::request_body(const PromptBundle& bundle, const std::string& model) {
  nlohmann::json messages = nlohmann::json::array();
  if (!bundle.system_text.empty()) messages.push_back({{"role", "system"}, {"content", bundle.system_text}});
  for (const auto& turn : bundle.user_turns) messages.push_back({{"role", "user"}, {"content", turn}});
  return {{"model", model},
          {"messages", std::move(messages)},
          {"temperature", bundle.decoding.temperature},
          {"max_tokens", bundle.decoding.max_tokens}};
}

ModelReply RemoteProvider::complete(const PromptBundle& bundle, std::chrono::milliseconds timeout) {
  std::map<std::string, std::string> headers;
  if (!config_.api_key.empty()) headers["Authorization"] = "Bearer " + config_.api_key;
  const auto start = std::chrono::steady_clock::now();
  http::JsonResponse res;
  try {
    res = http::post_json(endpoint_, "/chat/completions", request_body(bundle, config_.model), headers, timeout);
  } catch (const http::TransportError& e) {
    throw LlmError(ErrorKind::transport, config_.id, e.what());
  }
  const auto snippet = res.raw.substr(0, 300);
  if (res.status == 401 || res.status == 403) throw LlmError(ErrorKind::auth, config_.id, snippet);
  if (res.status == 429) throw LlmError(ErrorKind::rate_limited, config_.id, snippet);
  if (res.status >= 500) throw LlmError(ErrorKind::transport, config_.id, "HTTP " + std::to_string(res.status));
  if (res.status != 200) {
    throw LlmError(ErrorKind::bad_response, config_.id, "HTTP " + std::to_string(res.status) + ": " + snippet);
  }

  ModelReply reply;
  reply.provider_id = config_.id;
  try {
    const auto& content = res.body.at("choices").at(0).at("message").at("content");
    reply.text = content.is_null() ? std::string() : content.get<std::string>();
    if (res.body.contains("usage")) {
      const auto& u = res.body.at("usage");
      reply.usage.prompt = u.value("prompt_tokens", std::size_t{0});
      reply.usage.completion = u.value("completion_tokens", std::size_t{0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw LlmError(ErrorKind::bad_response, config_.id, std::string("unexpected reply shape: ") + e.what());
  }
  reply.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  return reply;
}

std::shared_ptr<ReplayProvider> ReplayProvider::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read replay file " + path);
  std::map<std::string, std::string> replies;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("prompt_sha256") || !j.contains("text")) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": not a replay record");
    }
    replies[j.at("prompt_sha256").get<std::string>()] = j.at("text").get<std::string>();
  }
  return std::make_shared<ReplayProvider>(std::move(replies));
}

ModelReply ReplayProvider::complete(const PromptBundle& bundle, std::chrono::milliseconds) {
  const auto prompt = bundle.concatenated();
  const auto it = replies_.find(text::sha256_hex(prompt));
  if (it == replies_.end()) throw LlmError(ErrorKind::no_script_match, id(), "no recorded reply for this prompt");
  return {it->second, id(), std::chrono::milliseconds(0), {approximate_tokens(prompt), approximate_tokens(it->second)}};
}

RecordingProvider::RecordingProvider(std::shared_ptr<Provider> inner, const std::string& path)
    : inner_(std::move(inner)), out_(path, std::ios::app | std::ios::binary) {
  if (!out_) throw std::invalid_argument("cannot open recording file " + path);
}

ModelReply RecordingProvider::complete(const PromptBundle& bundle, std::chrono::milliseconds timeout) {
  auto reply = inner_->complete(bundle, timeout);
  std::lock_guard lock(mutex_);
  out_ << nlohmann::json{{"prompt_sha256", text::sha256_hex(bundle.concatenated())}, {"text", reply.text}}.dump()
       << '\n';
  out_.flush();
  return reply;
}

}  // namespace finstat::llm
