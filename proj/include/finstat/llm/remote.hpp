#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "finstat/core/http.hpp"
#include "finstat/llm/provider.hpp"

namespace finstat::llm {

struct RemoteProviderConfig {
  std::string id = "openai";
  std::string base_url = "https://api.openai.com/v1";
  std::string model;
  std::string api_key;  // resolved by the caller, usually from an environment variable
};

// OpenAI-compatible POST {base_url}/chat/completions. The system text goes
// out as a system message and each user turn as its own user message.
class RemoteProvider final : public Provider {
 public:
  explicit RemoteProvider(RemoteProviderConfig config);
  std::string id() const override { return config_.id; }
  ModelReply complete(const PromptBundle& bundle, std::chrono::milliseconds timeout) override;

  static nlohmann::json request_body(const PromptBundle& bundle, const std::string& model);

 private:
  RemoteProviderConfig config_;
  http::Endpoint endpoint_;
};

// Replays replies keyed by the SHA-256 of the concatenated prompt. The file is
// JSONL with {"prompt_sha256", "text"} objects, as written by RecordingProvider.
class ReplayProvider final : public Provider {
 public:
  static std::shared_ptr<ReplayProvider> from_file(const std::string& path);
  explicit ReplayProvider(std::map<std::string, std::string> replies) : replies_(std::move(replies)) {}

  std::string id() const override { return "replay"; }
  ModelReply complete(const PromptBundle& bundle, std::chrono::milliseconds timeout) override;

 private:
  std::map<std::string, std::string> replies_;
};

// Passes calls through to `inner` and appends each successful reply to a JSONL file.
class RecordingProvider final : public Provider {
 public:
  RecordingProvider(std::shared_ptr<Provider> inner, const std::string& path);
  std::string id() const override { return inner_->id(); }
  ModelReply complete(const PromptBundle& bundle, std::chrono::milliseconds timeout) override;

 private:
  std::shared_ptr<Provider> inner_;
  std::mutex mutex_;
  std::ofstream out_;
};

}  // namespace finstat::llm
