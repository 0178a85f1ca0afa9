#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "finstat/llm/provider.hpp"

namespace finstat::llm {

// One complete() call as seen by the pipeline trace: the bundle that was sent
// and either the reply or the final error.
struct CallRecord {
  std::string stage;
  PromptBundle bundle;
  std::optional<ModelReply> reply;
  std::optional<std::string> error;
  std::size_t attempts = 0;
};

// Per-question call log. Thread-safe so parallel probes can share one log.
class CallLog {
 public:
  void add(CallRecord record);
  std::vector<CallRecord> records() const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<CallRecord> records_;
};

struct GatewayConfig {
  std::size_t max_retries = 2;
  std::chrono::milliseconds initial_backoff{250};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds timeout{30000};
};

class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit Gateway(std::shared_ptr<Provider> provider, GatewayConfig config = {}, Sleeper sleeper = {});

  const std::string& provider_id() const { return provider_id_; }
  const GatewayConfig& config() const { return config_; }

  // Transport errors are retried up to max_retries times with exponential
  // backoff; when all attempts fail the error kind is `exhausted` and the
  // message carries the last cause. Other typed errors propagate at once.
  // Every call, successful or not, appends exactly one record to `log`.
  ModelReply complete(const PromptBundle& bundle, CallLog* log = nullptr, std::string_view stage = {});

 private:
  std::shared_ptr<Provider> provider_;
  std::string provider_id_;
  GatewayConfig config_;
  Sleeper sleeper_;
};

}  // namespace finstat::llm
