#include "finstat/llm/gateway.hpp"

#include <thread>

#include <spdlog/spdlog.h>

namespace finstat::llm {

void CallLog::add(CallRecord record) {
  std::lock_guard lock(mutex_);
  records_.push_back(std::move(record));
}

std::vector<CallRecord> CallLog::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t CallLog::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

Gateway::Gateway(std::shared_ptr<Provider> provider, GatewayConfig config, Sleeper sleeper)
    : provider_(std::move(provider)), config_(config), sleeper_(std::move(sleeper)) {
  if (!provider_) throw std::invalid_argument("gateway needs a provider");
  provider_id_ = provider_->id();
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

ModelReply Gateway::complete(const PromptBundle& bundle, CallLog* log, std::string_view stage) {
  CallRecord record{std::string(stage), bundle, std::nullopt, std::nullopt, 0};
  const auto finish = [&](const LlmError& e) {
    record.error = e.what();
    if (log) log->add(std::move(record));
    throw e;
  };
  if (bundle.empty()) finish(LlmError(ErrorKind::invalid_request, provider_id_, "empty prompt bundle"));

  auto backoff = config_.initial_backoff;
  std::string last_cause;
  for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      sleeper_(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(backoff.count()) *
                                                                  config_.backoff_multiplier));
    }
    record.attempts = attempt + 1;
    try {
      auto reply = provider_->complete(bundle, config_.timeout);
      record.reply = reply;
      if (log) log->add(std::move(record));
      return reply;
    } catch (const LlmError& e) {
      if (e.kind() != ErrorKind::transport) finish(e);
      last_cause = e.detail();
      spdlog::warn("{} attempt {} failed: {}", provider_id_, attempt + 1, e.detail());
    }
  }
  finish(LlmError(ErrorKind::exhausted, provider_id_,
                  std::to_string(config_.max_retries + 1) + " attempts failed; last cause: " + last_cause));
  throw std::logic_error("unreachable");
}

}  // namespace finstat::llm
