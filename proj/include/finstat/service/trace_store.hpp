#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

namespace finstat::service {

// Ring buffer of trace documents keyed by trace id. With a directory, each
// trace is one file "<seq>_<id>.json" and the ring survives restarts; the
// oldest trace (file included) is evicted once `capacity` is exceeded.
class TraceStore {
 public:
  explicit TraceStore(std::string directory = {}, std::size_t capacity = 1000);

  void mark_pending(const std::string& id);
  void put(const std::string& id, const nlohmann::json& trace);

  enum class State { missing, pending, ready };
  struct Lookup {
    State state = State::missing;
    nlohmann::json trace;
  };
  Lookup get(const std::string& id) const;

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

  // Ids are lower-case hex, as produced by sqlgen::new_trace_id.
  static bool valid_id(const std::string& id);

 private:
  std::string path_for(std::uint64_t seq, const std::string& id) const;

  std::string directory_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::uint64_t next_seq_ = 1;
  std::deque<std::pair<std::string, std::uint64_t>> order_;  // oldest first
  std::map<std::string, std::uint64_t> seq_of_;
  std::map<std::string, nlohmann::json> memory_;  // used when there is no directory
  std::set<std::string> pending_;
};

}  // namespace finstat::service
