#include "finstat/eval/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "finstat/core/text.hpp"
#include "finstat/guard/parser.hpp"
#include "finstat/guard/printer.hpp"

namespace finstat::eval {
namespace {

std::string fold_outside_literals(std::string_view sql) {
  std::string out;
  out.reserve(sql.size());
  bool in_string = false;
  for (char ch : sql) {
    if (ch == '\'') in_string = !in_string;
    out += in_string ? ch : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

std::optional<guard::Query> parse_query(std::string_view sql) {
  const auto parsed = guard::parse_sql(sql);
  const auto* script = std::get_if<guard::Script>(&parsed);
  if (!script || script->statements.size() != 1 || !script->statements[0].is_query()) return std::nullopt;
  return std::get<guard::Query>(script->statements[0].body);
}

std::string norm(const guard::Expr& e) { return fold_outside_literals(guard::to_sql(e)); }

void split_and(const guard::Expr& e, std::set<std::string>& out) {
  if (const auto* b = std::get_if<guard::BinaryOp>(&e.node); b && b->op == "AND") {
    split_and(*b->lhs, out);
    split_and(*b->rhs, out);
    return;
  }
  out.insert(norm(e));
}

void collect_query(const guard::Query& q, ClauseSets& sets);

void collect_expr(const guard::Expr& e, ClauseSets& sets) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, guard::SubqueryExpr> || std::is_same_v<T, guard::ExistsExpr>) {
          collect_query(*n.query, sets);
        } else if constexpr (std::is_same_v<T, guard::InExpr>) {
          collect_expr(*n.value, sets);
          for (const auto& x : n.list) collect_expr(x, sets);
          if (n.subquery) collect_query(*n.subquery, sets);
        } else if constexpr (std::is_same_v<T, guard::UnaryOp>) {
          collect_expr(*n.operand, sets);
        } else if constexpr (std::is_same_v<T, guard::BinaryOp>) {
          collect_expr(*n.lhs, sets);
          collect_expr(*n.rhs, sets);
        } else if constexpr (std::is_same_v<T, guard::FunctionCall>) {
          for (const auto& x : n.args) collect_expr(x, sets);
        } else if constexpr (std::is_same_v<T, guard::BetweenExpr>) {
          collect_expr(*n.value, sets);
          collect_expr(*n.low, sets);
          collect_expr(*n.high, sets);
        } else if constexpr (std::is_same_v<T, guard::CaseExpr>) {
          if (n.operand) collect_expr(*n.operand, sets);
          for (const auto& w : n.whens) {
            collect_expr(w.condition, sets);
            collect_expr(w.result, sets);
          }
          if (n.otherwise) collect_expr(*n.otherwise, sets);
        } else if constexpr (std::is_same_v<T, guard::CastExpr>) {
          collect_expr(*n.operand, sets);
        }
      },
      e.node);
}

void collect_table(const guard::TableRef& t, ClauseSets& sets) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, guard::NamedTable>) {
          sets[Clause::from].insert(text::to_lower(n.name));
        } else if constexpr (std::is_same_v<T, guard::DerivedTable>) {
          collect_query(*n.query, sets);
        } else {
          collect_table(*n.left, sets);
          collect_table(*n.right, sets);
          if (n.on) collect_expr(*n.on, sets);
        }
      },
      t.node);
}

void collect_core(const guard::SelectCore& c, ClauseSets& sets) {
  for (const auto& item : c.items) {
    auto s = norm(item.expr);
    if (!item.alias.empty()) s += " as " + text::to_lower(item.alias);
    sets[Clause::select].insert(s);
    collect_expr(item.expr, sets);
  }
  for (const auto& t : c.from) collect_table(t, sets);
  if (c.where) {
    split_and(*c.where, sets[Clause::where]);
    collect_expr(*c.where, sets);
  }
  for (const auto& g : c.group_by) sets[Clause::group_by].insert(norm(g));
  if (c.having) collect_expr(*c.having, sets);
}

void collect_query(const guard::Query& q, ClauseSets& sets) {
  for (const auto& cte : q.ctes) collect_query(*cte.query, sets);
  collect_core(q.core, sets);
  for (const auto& part : q.compounds) collect_core(part.core, sets);
  for (const auto& o : q.order_by) sets[Clause::order_by].insert(norm(o.expr) + (o.descending ? " desc" : " asc"));
  if (q.limit) sets[Clause::limit].insert(norm(*q.limit));
}

std::optional<double> numeric(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&c)) return *d;
  return std::nullopt;
}

bool rows_equal(const std::vector<Cell>& a, const std::vector<Cell>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!cells_equal(a[i], b[i])) return false;
  }
  return true;
}

}  // namespace

std::optional<std::string> normalize_sql(std::string_view sql) {
  const auto q = parse_query(sql);
  if (!q) return std::nullopt;
  return fold_outside_literals(guard::to_sql(*q));
}

MatchResult exact_match(std::string_view pred_sql, std::string_view gold_sql) {
  MatchResult r;
  const auto p = normalize_sql(pred_sql);
  const auto g = normalize_sql(gold_sql);
  if (!p) r.warnings.push_back("prediction does not parse as one SELECT");
  if (!g) r.warnings.push_back("gold does not parse as one SELECT");
  r.match = p && g && *p == *g;
  return r;
}

std::string_view to_string(Clause clause) {
  switch (clause) {
    case Clause::select: return "select";
    case Clause::from: return "from";
    case Clause::where: return "where";
    case Clause::group_by: return "group_by";
    case Clause::order_by: return "order_by";
    case Clause::limit: return "limit";
  }
  return "select";
}

ClauseSets clause_sets(const guard::Query& query) {
  ClauseSets sets;
  for (auto c : k_all_clauses) sets[c];
  collect_query(query, sets);
  return sets;
}

ComponentScore component_match(std::string_view pred_sql, std::string_view gold_sql) {
  ComponentScore r;
  const auto p = parse_query(pred_sql);
  const auto g = parse_query(gold_sql);
  if (!p) r.warnings.push_back("prediction does not parse as one SELECT");
  if (!g) r.warnings.push_back("gold does not parse as one SELECT");
  if (!p || !g) return r;
  const auto ps = clause_sets(*p);
  const auto gs = clause_sets(*g);
  for (auto c : k_all_clauses) {
    if (gs.at(c).empty()) continue;
    ++r.counted;
    if (ps.at(c) == gs.at(c)) ++r.matched;
  }
  r.score = r.counted ? static_cast<double>(r.matched) / static_cast<double>(r.counted) : 0.0;
  return r;
}

bool cells_equal(const Cell& a, const Cell& b, double tolerance) {
  const auto na = numeric(a), nb = numeric(b);
  if (na && nb) {
    if (*na == *nb) return true;
    return std::fabs(*na - *nb) <= tolerance * std::max(std::fabs(*na), std::fabs(*nb));
  }
  return a == b;
}

bool execution_accuracy(const std::optional<ResultTable>& pred, const ResultTable& gold) {
  if (!pred || pred->columns.size() != gold.columns.size() || pred->rows.size() != gold.rows.size()) return false;

  // Column permutation: by name when the name sets agree, else identity.
  std::vector<std::size_t> perm(gold.columns.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  {
    std::vector<std::string> gn, pn;
    for (const auto& c : gold.columns) gn.push_back(text::to_lower(c));
    for (const auto& c : pred->columns) pn.push_back(text::to_lower(c));
    const std::set<std::string> gs(gn.begin(), gn.end()), ps(pn.begin(), pn.end());
    if (gs == ps && gs.size() == gn.size()) {
      for (std::size_t i = 0; i < gn.size(); ++i) {
        perm[i] = static_cast<std::size_t>(std::find(pn.begin(), pn.end(), gn[i]) - pn.begin());
      }
    }
  }
  std::vector<std::vector<Cell>> rows;
  for (const auto& r : pred->rows) {
    std::vector<Cell> out;
    for (auto i : perm) out.push_back(i < r.size() ? r[i] : Cell{});
    rows.push_back(std::move(out));
  }

  if (gold.ordered) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows_equal(rows[i], gold.rows[i])) return false;
    }
    return true;
  }
  std::vector<bool> used(rows.size(), false);
  for (const auto& g : gold.rows) {
    bool found = false;
    for (std::size_t i = 0; i < rows.size() && !found; ++i) {
      if (!used[i] && rows_equal(rows[i], g)) used[i] = found = true;
    }
    if (!found) return false;
  }
  return true;
}

double valid_efficiency_score(bool ex, double pred_time, double gold_time) {
  if (!(pred_time > 0) || !(gold_time > 0)) throw std::invalid_argument("execution times must be positive");
  return ex ? std::sqrt(gold_time / pred_time) : 0.0;
}

bool has_top_level_order(std::string_view sql) {
  const auto q = parse_query(sql);
  return q && !q->order_by.empty();
}

}  // namespace finstat::eval
