#include "finstat/sqlgen/fewshots.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "finstat/core/assets.hpp"
#include "finstat/core/text.hpp"

namespace finstat::sqlgen {

FewShotStore::FewShotStore(std::vector<FewShotExample> examples, const store::SchemaCatalog& catalog,
                           const guard::QueryPolicy& policy)
    : examples_(std::move(examples)) {
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const auto report = guard::check_sql(examples_[i].sql, catalog, policy);
    if (!report.admitted()) {
      throw std::invalid_argument("few-shot example " + std::to_string(i + 1) + " (\"" + examples_[i].question +
                                  "\") rejected by guard: " + report.describe());
    }
  }
}

std::vector<FewShotExample> FewShotStore::parse_jsonl(std::string_view jsonl) {
  std::vector<FewShotExample> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("question") || !j.contains("sql") ||
        !j["question"].is_string() || !j["sql"].is_string()) {
      throw std::invalid_argument("few-shot line " + std::to_string(line_no) +
                                  ": expected an object with string \"question\" and \"sql\"");
    }
    FewShotExample ex{j["question"].get<std::string>(), j["sql"].get<std::string>(), std::nullopt};
    if (j.contains("commentary") && j["commentary"].is_string()) ex.commentary = j["commentary"].get<std::string>();
    out.push_back(std::move(ex));
  }
  return out;
}

FewShotStore FewShotStore::shipped(const store::SchemaCatalog& catalog) {
  return FewShotStore(parse_jsonl(assets::get(k_fewshot_asset)), catalog);
}

FewShotStore FewShotStore::from_file(const std::string& path, const store::SchemaCatalog& catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read few-shot file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return FewShotStore(parse_jsonl(buf.str()), catalog);
}

std::string FewShotStore::entry_id(std::size_t position) { return "fewshot:" + std::to_string(position); }

void FewShotStore::index_into(vec::VectorIndex& index) const {
  index.clear(vec::Namespace::fewshot);
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    index.upsert_text(vec::Namespace::fewshot, entry_id(i), examples_[i].question);
  }
}

const FewShotExample* FewShotStore::find_entry(std::string_view id) const {
  constexpr std::string_view prefix = "fewshot:";
  if (!id.starts_with(prefix)) return nullptr;
  std::size_t pos = 0;
  try {
    pos = std::stoul(std::string(id.substr(prefix.size())));
  } catch (const std::exception&) {
    return nullptr;
  }
  return pos < examples_.size() ? &examples_[pos] : nullptr;
}

std::vector<FewShotHit> retrieve_fewshots(const vec::VectorIndex& index, const FewShotStore& store,
                                          std::string_view question, std::size_t k) {
  std::vector<FewShotHit> out;
  const auto population = index.size(vec::Namespace::fewshot);
  if (k == 0 || store.empty() || population == 0) return out;

  // Search the whole namespace so duplicates of a SQL text cannot crowd out the k-th distinct one.
  std::set<std::string> seen_sql;
  for (const auto& c : index.search(vec::Namespace::fewshot, question, population)) {
    const auto* ex = store.find_entry(c.id);
    if (!ex || !seen_sql.insert(std::string(text::trim(ex->sql))).second) continue;
    out.push_back({*ex, c.id, c.score});
    if (out.size() == k) break;
  }
  return out;
}

nlohmann::json to_json(const FewShotExample& example) {
  nlohmann::json j{{"question", example.question}, {"sql", example.sql}};
  if (example.commentary) j["commentary"] = *example.commentary;
  return j;
}

nlohmann::json to_json(const FewShotHit& hit) {
  auto j = to_json(hit.example);
  j["id"] = hit.id;
  j["score"] = hit.score;
  return j;
}

}  // namespace finstat::sqlgen
