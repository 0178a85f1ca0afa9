#include "finstat/service/trace_store.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace fs = std::filesystem;

namespace finstat::service {

TraceStore::TraceStore(std::string directory, std::size_t capacity)
    : directory_(std::move(directory)), capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("trace capacity must be positive");
  if (directory_.empty()) return;
  fs::create_directories(directory_);

  std::vector<std::pair<std::uint64_t, std::string>> found;
  for (const auto& entry : fs::directory_iterator(directory_)) {
    const auto name = entry.path().filename().string();
    const auto underscore = name.find('_');
    if (!entry.is_regular_file() || underscore == std::string::npos || !name.ends_with(".json")) continue;
    try {
      const auto seq = std::stoull(name.substr(0, underscore));
      const auto id = name.substr(underscore + 1, name.size() - underscore - 1 - 5);
      if (valid_id(id)) found.emplace_back(seq, id);
    } catch (const std::exception&) {
    }
  }
  std::sort(found.begin(), found.end());
  for (const auto& [seq, id] : found) {
    order_.emplace_back(id, seq);
    seq_of_[id] = seq;
    next_seq_ = std::max(next_seq_, seq + 1);
  }
  while (order_.size() > capacity_) {
    const auto [id, seq] = order_.front();
    order_.pop_front();
    seq_of_.erase(id);
    fs::remove(path_for(seq, id));
  }
}

bool TraceStore::valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

std::string TraceStore::path_for(std::uint64_t seq, const std::string& id) const {
  return (fs::path(directory_) / fmt::format("{:012}_{}.json", seq, id)).string();
}

void TraceStore::mark_pending(const std::string& id) {
  std::lock_guard lock(mutex_);
  pending_.insert(id);
}

void TraceStore::put(const std::string& id, const nlohmann::json& trace) {
  if (!valid_id(id)) throw std::invalid_argument("bad trace id '" + id + "'");
  std::lock_guard lock(mutex_);
  pending_.erase(id);
  if (seq_of_.count(id)) return;
  const auto seq = next_seq_++;
  if (directory_.empty()) {
    memory_[id] = trace;
  } else {
    const auto path = path_for(seq, id);
    const auto tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << trace.dump();
      if (!out) throw std::runtime_error("cannot write trace file " + tmp);
    }
    fs::rename(tmp, path);
  }
  order_.emplace_back(id, seq);
  seq_of_[id] = seq;
  while (order_.size() > capacity_) {
    const auto [old_id, old_seq] = order_.front();
    order_.pop_front();
    seq_of_.erase(old_id);
    if (directory_.empty()) {
      memory_.erase(old_id);
    } else {
      std::error_code ec;
      fs::remove(path_for(old_seq, old_id), ec);
      if (ec) spdlog::warn("cannot evict trace {}: {}", old_id, ec.message());
    }
  }
}

TraceStore::Lookup TraceStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  Lookup out;
  if (pending_.count(id)) {
    out.state = State::pending;
    return out;
  }
  const auto it = seq_of_.find(id);
  if (it == seq_of_.end()) return out;
  if (directory_.empty()) {
    out.trace = memory_.at(id);
  } else {
    std::ifstream in(path_for(it->second, id), std::ios::binary);
    if (!in) return out;
    std::ostringstream buf;
    buf << in.rdbuf();
    out.trace = nlohmann::json::parse(buf.str(), nullptr, false);
    if (out.trace.is_discarded()) return {};
  }
  out.state = State::ready;
  return out;
}

std::size_t TraceStore::size() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

}  // namespace finstat::service
