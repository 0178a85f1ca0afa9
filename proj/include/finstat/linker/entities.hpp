#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "finstat/llm/provider.hpp"
#include "finstat/vec/index.hpp"

namespace finstat::linker {

struct ExtractedEntities {
  std::vector<std::string> industry;
  std::vector<std::string> company_name;
  std::vector<std::string> financial_statement_account;
  std::vector<std::string> financial_ratio;

  bool empty() const;
  bool operator==(const ExtractedEntities&) const = default;
};

// The four reply keys, in schema order.
inline constexpr std::string_view k_entity_keys[] = {"industry", "company_name", "financial_statement_account",
                                                     "financial_ratio"};

struct ParsedEntities {
  ExtractedEntities entities;
  std::vector<std::string> warnings;
};

class EntityParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Entity extraction prompt: the template as a single user turn, temperature 0.
llm::PromptBundle render_entity_prompt(std::string_view task);

// Reads the first fenced code block, or the outermost {...} when there is no
// fence, as a JSON object. A missing or non-list key becomes an empty list
// with a warning. Throws EntityParseError when no JSON object can be found.
ParsedEntities parse_entity_reply(std::string_view reply);

// Growth tags that trigger the base-account rule (case-insensitive words).
inline constexpr std::string_view k_growth_tags[] = {"YoY", "QoQ"};
// Every tag recognised on entity terms.
inline constexpr std::string_view k_period_tags[] = {"YoY", "QoQ", "TTM", "trailing twelve months",
                                                     "4 nearest quarter"};

// Removes growth tags from a term: "Net Income YoY" -> "Net Income". Returns
// the term unchanged when it carries none.
std::string strip_growth_tags(std::string_view term);
bool has_growth_tag(std::string_view term);

// Base-account rule: for every YoY/QoQ-tagged term in either list, the untagged
// base must appear in financial_statement_account. Missing bases are appended;
// returns one note per addition.
std::vector<std::string> apply_base_account_rule(ExtractedEntities& entities);

struct LinkedCandidate {
  std::string code;  // stock code, industry name, category code or ratio code
  std::string id;    // index entry id
  std::string surface_text;
  double score = 0;
};

struct LinkedTerm {
  std::string term;
  std::vector<LinkedCandidate> candidates;  // descending score, one per code
};

struct LinkedCandidates {
  std::vector<LinkedTerm> industry;
  std::vector<LinkedTerm> company_name;
  std::vector<LinkedTerm> financial_statement_account;
  std::vector<LinkedTerm> financial_ratio;

  std::size_t candidate_count() const;
};

inline constexpr std::size_t k_default_link_depth = 5;

// Searches each term in its namespace (company_name -> company, industry ->
// industry, account -> account, ratio -> ratio) at depth k and keeps the best
// scoring candidate per resolved code.
LinkedCandidates link_entities(const ExtractedEntities& entities, const vec::VectorIndex& index,
                               std::size_t k = k_default_link_depth);

nlohmann::json to_json(const ExtractedEntities& entities);
ExtractedEntities entities_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LinkedCandidates& linked);

}  // namespace finstat::linker
