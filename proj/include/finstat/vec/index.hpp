#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "finstat/vec/embedder.hpp"

namespace finstat::vec {

enum class Namespace { industry, company, account, ratio, fewshot };

inline constexpr Namespace k_all_namespaces[] = {Namespace::industry, Namespace::company, Namespace::account,
                                                 Namespace::ratio, Namespace::fewshot};

std::string_view to_string(Namespace ns);
// Throws std::invalid_argument for an unknown name.
Namespace namespace_from_string(std::string_view name);

using Metadata = std::map<std::string, std::string>;

struct EmbeddedEntry {
  Namespace ns = Namespace::account;
  std::string id;
  std::string surface_text;
  Vector vector;
  Metadata metadata;
};

struct Candidate {
  std::string id;
  std::string surface_text;
  double score = 0;  // cosine similarity, clamped to [-1, 1]
  Metadata metadata;
};

// Exhaustive cosine index, one population per namespace. Searches run
// concurrently; upserts take an exclusive lock.
class VectorIndex {
 public:
  explicit VectorIndex(std::shared_ptr<const Embedder> embedder);

  const Embedder& embedder() const { return *embedder_; }

  // Same (namespace, id) replaces. Throws std::invalid_argument on a zero
  // vector or when the length differs from the namespace's dimension.
  void upsert(EmbeddedEntry entry);
  // Embeds `text` with the index's embedder and upserts it.
  void upsert_text(Namespace ns, std::string id, std::string text, Metadata metadata = {});

  // min(k, population) candidates by descending score, ties by ascending id.
  // Throws std::invalid_argument when k is 0.
  std::vector<Candidate> search(Namespace ns, std::string_view query_text, std::size_t k) const;
  std::vector<Candidate> search_vector(Namespace ns, const Vector& query, std::size_t k) const;

  std::size_t size(Namespace ns) const;
  std::optional<EmbeddedEntry> get(Namespace ns, std::string_view id) const;
  void clear(Namespace ns);

  // Tab-separated flat file: a header line, then one line per entry with
  // namespace, id, escaped text, base64 little-endian float64 vector and
  // metadata as a JSON object.
  void save(const std::string& path) const;
  // Replaces the index contents. Throws std::runtime_error on a malformed file
  // or when the file was written by a different embedder.
  void load(const std::string& path);

 private:
  struct Slot {
    std::size_t dimension = 0;
    std::map<std::string, EmbeddedEntry, std::less<>> entries;
  };

  std::shared_ptr<const Embedder> embedder_;
  mutable std::shared_mutex mutex_;
  std::map<Namespace, Slot> slots_;
};

}  // namespace finstat::vec
