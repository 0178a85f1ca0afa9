#include "finstat/vec/index.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "finstat/core/text.hpp"

namespace finstat::vec {
namespace {

constexpr std::string_view k_header = "#finstat.vecindex/v1";

std::string escape_field(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    switch (s[++i]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: out += s[i];
    }
  }
  return out;
}

std::string encode_vector(const Vector& v) {
  static_assert(std::endian::native == std::endian::little, "index files are little-endian");
  std::vector<unsigned char> bytes(v.size() * sizeof(double));
  std::memcpy(bytes.data(), v.data(), bytes.size());
  return text::base64_encode(bytes);
}

Vector decode_vector(std::string_view encoded) {
  const auto bytes = text::base64_decode(encoded);
  if (bytes.size() % sizeof(double) != 0) throw std::runtime_error("vector payload has a partial element");
  Vector v(bytes.size() / sizeof(double));
  std::memcpy(v.data(), bytes.data(), bytes.size());
  return v;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(Namespace ns) {
  switch (ns) {
    case Namespace::industry: return "industry";
    case Namespace::company: return "company";
    case Namespace::account: return "account";
    case Namespace::ratio: return "ratio";
    case Namespace::fewshot: return "fewshot";
  }
  return "account";
}

Namespace namespace_from_string(std::string_view name) {
  for (auto ns : k_all_namespaces) {
    if (to_string(ns) == name) return ns;
  }
  throw std::invalid_argument("unknown namespace '" + std::string(name) + "'");
}

VectorIndex::VectorIndex(std::shared_ptr<const Embedder> embedder) : embedder_(std::move(embedder)) {
  if (!embedder_) throw std::invalid_argument("vector index needs an embedder");
}

void VectorIndex::upsert(EmbeddedEntry entry) {
  if (entry.id.empty()) throw std::invalid_argument("entry id is empty");
  if (entry.vector.empty() || l2_norm(entry.vector) == 0) {
    throw std::invalid_argument("zero vector for '" + entry.id + "'");
  }
  std::unique_lock lock(mutex_);
  auto& slot = slots_[entry.ns];
  if (slot.entries.empty()) slot.dimension = entry.vector.size();
  if (entry.vector.size() != slot.dimension) {
    throw std::invalid_argument("dimension mismatch in namespace " + std::string(to_string(entry.ns)) + ": " +
                                std::to_string(entry.vector.size()) + " != " + std::to_string(slot.dimension));
  }
  auto id = entry.id;
  slot.entries.insert_or_assign(std::move(id), std::move(entry));
}

void VectorIndex::upsert_text(Namespace ns, std::string id, std::string text, Metadata metadata) {
  auto vector = embedder_->embed(text);
  upsert({ns, std::move(id), std::move(text), std::move(vector), std::move(metadata)});
}

std::vector<Candidate> VectorIndex::search(Namespace ns, std::string_view query_text, std::size_t k) const {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  return search_vector(ns, embedder_->embed(query_text), k);
}

std::vector<Candidate> VectorIndex::search_vector(Namespace ns, const Vector& query, std::size_t k) const {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  std::shared_lock lock(mutex_);
  const auto it = slots_.find(ns);
  if (it == slots_.end() || it->second.entries.empty()) return {};
  const auto& slot = it->second;
  if (query.size() != slot.dimension) {
    throw std::invalid_argument("query dimension " + std::to_string(query.size()) + " != namespace dimension " +
                                std::to_string(slot.dimension));
  }

  std::vector<std::pair<double, const EmbeddedEntry*>> scored;
  scored.reserve(slot.entries.size());
  for (const auto& [id, entry] : slot.entries) scored.emplace_back(cosine(query, entry.vector), &entry);
  const auto take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second->id < b.second->id;
                    });
  std::vector<Candidate> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const auto& e = *scored[i].second;
    out.push_back({e.id, e.surface_text, scored[i].first, e.metadata});
  }
  return out;
}

std::size_t VectorIndex::size(Namespace ns) const {
  std::shared_lock lock(mutex_);
  const auto it = slots_.find(ns);
  return it == slots_.end() ? 0 : it->second.entries.size();
}

std::optional<EmbeddedEntry> VectorIndex::get(Namespace ns, std::string_view id) const {
  std::shared_lock lock(mutex_);
  const auto it = slots_.find(ns);
  if (it == slots_.end()) return std::nullopt;
  const auto e = it->second.entries.find(id);
  if (e == it->second.entries.end()) return std::nullopt;
  return e->second;
}

void VectorIndex::clear(Namespace ns) {
  std::unique_lock lock(mutex_);
  slots_.erase(ns);
}

void VectorIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write index file " + path);
  std::shared_lock lock(mutex_);
  out << k_header << '\t' << embedder_->name() << '\n';
  for (const auto& [ns, slot] : slots_) {
    for (const auto& [id, e] : slot.entries) {
      nlohmann::json meta(e.metadata);
      out << to_string(ns) << '\t' << escape_field(e.id) << '\t' << escape_field(e.surface_text) << '\t'
          << encode_vector(e.vector) << '\t' << meta.dump() << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing index file " + path);
}

void VectorIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read index file " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("index file " + path + " is empty");
  const auto head = split_tabs(line);
  if (head.size() != 2 || head[0] != k_header) throw std::runtime_error("index file " + path + " has no header");
  if (head[1] != embedder_->name()) {
    throw std::runtime_error("index file " + path + " was built with embedder '" + std::string(head[1]) +
                             "', not '" + embedder_->name() + "'");
  }

  std::map<Namespace, Slot> loaded;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    const auto where = path + ":" + std::to_string(line_no);
    if (fields.size() != 5) throw std::runtime_error(where + ": expected 5 fields");
    EmbeddedEntry e;
    try {
      e.ns = namespace_from_string(fields[0]);
      e.vector = decode_vector(fields[3]);
      e.metadata = nlohmann::json::parse(fields[4]).get<Metadata>();
    } catch (const std::exception& ex) {
      throw std::runtime_error(where + ": " + ex.what());
    }
    e.id = unescape_field(fields[1]);
    e.surface_text = unescape_field(fields[2]);
    auto& slot = loaded[e.ns];
    if (slot.entries.empty()) slot.dimension = e.vector.size();
    if (e.vector.size() != slot.dimension || l2_norm(e.vector) == 0) {
      throw std::runtime_error(where + ": bad vector");
    }
    auto id = e.id;
    slot.entries.insert_or_assign(std::move(id), std::move(e));
  }
  std::unique_lock lock(mutex_);
  slots_ = std::move(loaded);
}

}  // namespace finstat::vec
