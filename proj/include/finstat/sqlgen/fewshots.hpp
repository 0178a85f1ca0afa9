#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "finstat/guard/validator.hpp"
#include "finstat/vec/index.hpp"

namespace finstat::sqlgen {

struct FewShotExample {
  std::string question;
  std::string sql;
  std::optional<std::string> commentary;

  bool operator==(const FewShotExample&) const = default;
};

inline constexpr std::string_view k_fewshot_asset = "fewshots.jsonl";

// Curated question/SQL pairs. Every SQL is checked by the guard when the store
// is built; a rejected example is a load error, not a silent skip.
class FewShotStore {
 public:
  FewShotStore() = default;
  // Throws std::invalid_argument naming the first example the guard rejects.
  FewShotStore(std::vector<FewShotExample> examples, const store::SchemaCatalog& catalog,
               const guard::QueryPolicy& policy = {});

  // JSONL, one {"question", "sql", "commentary"?} object per line.
  static std::vector<FewShotExample> parse_jsonl(std::string_view jsonl);
  static FewShotStore shipped(const store::SchemaCatalog& catalog);
  static FewShotStore from_file(const std::string& path, const store::SchemaCatalog& catalog);

  const std::vector<FewShotExample>& examples() const { return examples_; }
  bool empty() const { return examples_.empty(); }

  // Entry ids are "fewshot:<position>"; the question is the embedded text.
  void index_into(vec::VectorIndex& index) const;

  static std::string entry_id(std::size_t position);
  const FewShotExample* find_entry(std::string_view id) const;

 private:
  std::vector<FewShotExample> examples_;
};

struct FewShotHit {
  FewShotExample example;
  std::string id;
  double score = 0;
};

// Top-k stored examples by question similarity, one per distinct SQL text.
// An empty store or namespace gives an empty list.
std::vector<FewShotHit> retrieve_fewshots(const vec::VectorIndex& index, const FewShotStore& store,
                                          std::string_view question, std::size_t k);

nlohmann::json to_json(const FewShotExample& example);
nlohmann::json to_json(const FewShotHit& hit);

}  // namespace finstat::sqlgen
