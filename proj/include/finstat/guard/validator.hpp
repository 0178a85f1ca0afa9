#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "finstat/guard/ast.hpp"
#include "finstat/store/catalog.hpp"

namespace finstat::guard {

struct QueryPolicy {
  bool require_limit = true;
  std::size_t max_limit = 1000;
  bool require_quarter_condition = true;
  bool allow_ctes = true;
  // Empty means every catalog table.
  std::set<std::string> allowed_tables;

  // The guard never admits a mutating statement; there is no switch for it.
  static constexpr bool read_only = true;
};

QueryPolicy policy_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QueryPolicy& policy);

enum class Verdict { pass, rewritten, reject };

std::string_view to_string(Verdict verdict);

struct Violation {
  // syntax, single_statement, read_only, cte_not_allowed, unknown_table,
  // table_not_allowed, unknown_column, ambiguous_column, forbidden_function,
  // quarter_condition, limit
  std::string rule;
  std::size_t location = 0;  // byte offset into the checked SQL
  std::string message;
  bool rewritable = false;
};

struct ValidationReport {
  Verdict verdict = Verdict::pass;
  std::vector<Violation> violations;
  std::optional<std::string> rewritten_sql;

  bool admitted() const { return verdict != Verdict::reject; }
  // SQL to execute when admitted: the rewrite if any, else `original`.
  std::string effective_sql(std::string_view original) const;
  // One line per violation, "rule@offset: message".
  std::string describe() const;
};

nlohmann::json to_json(const ValidationReport& report);

// Policy checks over a parsed script, in order: single statement, statement
// class, table/column resolution, quarter condition, LIMIT (rewrite or clamp).
ValidationReport validate(const Script& script, const store::SchemaCatalog& catalog,
                          const QueryPolicy& policy);

// Parse + validate. A syntax error becomes a reject with rule "syntax".
ValidationReport check_sql(std::string_view sql, const store::SchemaCatalog& catalog,
                           const QueryPolicy& policy);

// True when any predicate compares a column named `quarter` (=, <>, <, <=, >,
// >=, IS, BETWEEN, IN) anywhere in the query, CTEs and subqueries included.
bool has_quarter_condition(const Query& query);

}  // namespace finstat::guard
