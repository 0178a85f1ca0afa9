#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "finstat/core/result_table.hpp"
#include "finstat/guard/ast.hpp"

namespace finstat::eval {

// Canonical text of a single SELECT statement: the guard printer's output,
// lower-cased outside string literals. nullopt when it does not parse as
// exactly one query.
std::optional<std::string> normalize_sql(std::string_view sql);

struct MatchResult {
  bool match = false;
  std::vector<std::string> warnings;
};

MatchResult exact_match(std::string_view pred_sql, std::string_view gold_sql);

// Clause kinds compared by component matching, in report order.
enum class Clause { select, from, where, group_by, order_by, limit };
inline constexpr Clause k_all_clauses[] = {Clause::select,   Clause::from,     Clause::where,
                                           Clause::group_by, Clause::order_by, Clause::limit};
std::string_view to_string(Clause clause);

using ClauseSets = std::map<Clause, std::set<std::string>>;

// Normalized clause sets over every SELECT core of the query (CTEs, derived
// tables and subqueries included). WHERE is split on top-level AND.
ClauseSets clause_sets(const guard::Query& query);

struct ComponentScore {
  double score = 0;
  std::size_t matched = 0;
  std::size_t counted = 0;  // clause kinds that are non-empty in gold
  std::vector<std::string> warnings;
};

ComponentScore component_match(std::string_view pred_sql, std::string_view gold_sql);

inline constexpr double k_numeric_tolerance = 1e-6;

// Relative tolerance on numbers; integers and reals compare by value.
bool cells_equal(const Cell& a, const Cell& b, double tolerance = k_numeric_tolerance);

// Columns are matched by name when both sides carry the same names, else by
// position. Rows compare as multisets unless gold.ordered, then in order.
bool execution_accuracy(const std::optional<ResultTable>& pred, const ResultTable& gold);

// 0 when !ex, else sqrt(gold_time / pred_time). Non-positive times throw
// std::invalid_argument.
double valid_efficiency_score(bool ex, double pred_time, double gold_time);

// True when the statement has an ORDER BY at its top level.
bool has_top_level_order(std::string_view sql);

}  // namespace finstat::eval
