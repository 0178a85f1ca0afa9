#include "finstat/guard/validator.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>

#include "finstat/core/text.hpp"
#include "finstat/guard/parser.hpp"
#include "finstat/guard/printer.hpp"

namespace finstat::guard {

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::pass: return "pass";
    case Verdict::rewritten: return "rewritten";
    case Verdict::reject: return "reject";
  }
  return "reject";
}

std::string ValidationReport::effective_sql(std::string_view original) const {
  return rewritten_sql ? *rewritten_sql : std::string(original);
}

std::string ValidationReport::describe() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += '\n';
    out += v.rule + "@" + std::to_string(v.location) + ": " + v.message;
  }
  return out;
}

nlohmann::json to_json(const ValidationReport& report) {
  nlohmann::json violations = nlohmann::json::array();
  for (const auto& v : report.violations) {
    violations.push_back({{"rule", v.rule},
                          {"location", v.location},
                          {"message", v.message},
                          {"rewritable", v.rewritable}});
  }
  nlohmann::json j = {{"verdict", to_string(report.verdict)}, {"violations", std::move(violations)}};
  j["rewritten_sql"] = report.rewritten_sql ? nlohmann::json(*report.rewritten_sql) : nlohmann::json();
  return j;
}

QueryPolicy policy_from_json(const nlohmann::json& j) {
  QueryPolicy p;
  if (j.contains("read_only") && !j.at("read_only").get<bool>()) {
    throw std::invalid_argument("policy.read_only cannot be disabled");
  }
  p.require_limit = j.value("require_limit", p.require_limit);
  p.max_limit = j.value("max_limit", p.max_limit);
  p.require_quarter_condition = j.value("require_quarter_condition", p.require_quarter_condition);
  p.allow_ctes = j.value("allow_ctes", p.allow_ctes);
  if (j.contains("allowed_tables")) {
    for (const auto& t : j.at("allowed_tables")) p.allowed_tables.insert(text::to_lower(t.get<std::string>()));
  }
  if (p.max_limit == 0) throw std::invalid_argument("policy.max_limit must be positive");
  return p;
}

nlohmann::json to_json(const QueryPolicy& policy) {
  return {{"require_limit", policy.require_limit},
          {"max_limit", policy.max_limit},
          {"require_quarter_condition", policy.require_quarter_condition},
          {"allow_ctes", policy.allow_ctes},
          {"allowed_tables", policy.allowed_tables},
          {"read_only", QueryPolicy::read_only}};
}

namespace {

constexpr std::string_view k_forbidden_functions[] = {
    "load_extension", "readfile", "writefile", "edit", "fts3_tokenizer", "sqlite_compileoption_get",
    "sqlite_offset", "pg_sleep", "pg_read_file", "lo_import", "lo_export", "dblink",
};

// ---- generic tree walking (used by the quarter rule and table collection) ----

struct TreeWalker {
  std::function<void(const Expr&)> on_expr;
  std::function<void(const NamedTable&)> on_table;

  void query(const Query& q) const {
    for (const auto& cte : q.ctes) query(*cte.query);
    core(q.core);
    for (const auto& part : q.compounds) core(part.core);
    for (const auto& item : q.order_by) expr(item.expr);
    if (q.limit) expr(*q.limit);
    if (q.offset) expr(*q.offset);
  }

  void core(const SelectCore& c) const {
    for (const auto& item : c.items) expr(item.expr);
    for (const auto& ref : c.from) table(ref);
    if (c.where) expr(*c.where);
    for (const auto& g : c.group_by) expr(g);
    if (c.having) expr(*c.having);
  }

  void table(const TableRef& ref) const {
    if (const auto* t = std::get_if<NamedTable>(&ref.node)) {
      if (on_table) on_table(*t);
    } else if (const auto* d = std::get_if<DerivedTable>(&ref.node)) {
      query(*d->query);
    } else {
      const auto& j = std::get<JoinedTable>(ref.node);
      table(*j.left);
      table(*j.right);
      if (j.on) expr(*j.on);
    }
  }

  void expr(const Expr& e) const {
    if (on_expr) on_expr(e);
    struct Visitor {
      const TreeWalker& w;
      void operator()(const Literal&) const {}
      void operator()(const ColumnRef&) const {}
      void operator()(const Star&) const {}
      void operator()(const UnaryOp& u) const { w.expr(*u.operand); }
      void operator()(const BinaryOp& b) const {
        w.expr(*b.lhs);
        w.expr(*b.rhs);
      }
      void operator()(const FunctionCall& f) const {
        for (const auto& a : f.args) w.expr(a);
      }
      void operator()(const CaseExpr& c) const {
        if (c.operand) w.expr(*c.operand);
        for (const auto& when : c.whens) {
          w.expr(when.condition);
          w.expr(when.result);
        }
        if (c.otherwise) w.expr(*c.otherwise);
      }
      void operator()(const CastExpr& c) const { w.expr(*c.operand); }
      void operator()(const BetweenExpr& b) const {
        w.expr(*b.value);
        w.expr(*b.low);
        w.expr(*b.high);
      }
      void operator()(const InExpr& in) const {
        w.expr(*in.value);
        for (const auto& item : in.list) w.expr(item);
        if (in.subquery) w.query(*in.subquery);
      }
      void operator()(const ExistsExpr& ex) const { w.query(*ex.query); }
      void operator()(const SubqueryExpr& sub) const { w.query(*sub.query); }
    };
    std::visit(Visitor{*this}, e.node);
  }
};

bool is_quarter_column(const Expr& e) {
  const auto* col = std::get_if<ColumnRef>(&e.node);
  return col != nullptr && text::iequals(col->name, "quarter");
}

// ---- name resolution ----

struct Source {
  std::string name;                  // alias, or table/CTE name when unaliased
  std::vector<std::string> columns;  // lower-cased
  bool open = false;                 // columns unknown; accept any reference
};

struct Scope {
  const Scope* parent = nullptr;
  std::vector<Source> sources;
  std::vector<std::string> using_columns;
  std::vector<std::string> output_aliases;
};

struct CteEnv {
  const CteEnv* parent = nullptr;
  std::map<std::string, std::vector<std::string>> ctes;

  const std::vector<std::string>* find(const std::string& name) const {
    for (const CteEnv* env = this; env != nullptr; env = env->parent) {
      const auto it = env->ctes.find(text::to_lower(name));
      if (it != env->ctes.end()) return &it->second;
    }
    return nullptr;
  }
};

bool contains_icase(const std::vector<std::string>& names, const std::string& name) {
  return std::any_of(names.begin(), names.end(),
                     [&](const std::string& n) { return text::iequals(n, name); });
}

class Resolver {
 public:
  Resolver(const store::SchemaCatalog& catalog, const QueryPolicy& policy,
           std::vector<Violation>& out)
      : catalog_(catalog), policy_(policy), out_(out) {}

  std::vector<std::string> query(const Query& q, const CteEnv* env, const Scope* outer) {
    CteEnv local{env, {}};
    for (const auto& cte : q.ctes) {
      if (q.recursive) local.ctes[text::to_lower(cte.name)] = {};  // provisional, for self-reference
      auto cols = query(*cte.query, &local, outer);
      if (!cte.columns.empty()) cols = cte.columns;
      for (auto& c : cols) c = text::to_lower(c);
      local.ctes[text::to_lower(cte.name)] = std::move(cols);
    }
    const CteEnv* active = q.ctes.empty() ? env : &local;

    const bool compound = !q.compounds.empty();
    auto outputs = core(q.core, active, outer, compound ? nullptr : &q.order_by);
    for (const auto& part : q.compounds) core(part.core, active, outer, nullptr);
    if (compound) {
      // ORDER BY on a compound may only name output columns (or positions).
      Scope scope;
      scope.parent = nullptr;
      scope.sources.push_back(Source{"", outputs, false});
      for (const auto& item : q.order_by) expr(item.expr, scope, active, true);
    }
    Scope constants;
    if (q.limit) expr(*q.limit, constants, active, false);
    if (q.offset) expr(*q.offset, constants, active, false);
    return outputs;
  }

 private:
  std::vector<std::string> core(const SelectCore& c, const CteEnv* env, const Scope* outer,
                                const std::vector<OrderItem>* order_by) {
    Scope scope;
    scope.parent = outer;
    std::vector<const Expr*> join_conditions;
    for (const auto& ref : c.from) add_sources(ref, scope, env, outer, join_conditions);
    for (const Expr* on : join_conditions) expr(*on, scope, env, false);

    std::vector<std::string> outputs;
    for (const auto& item : c.items) {
      if (const auto* star = std::get_if<Star>(&item.expr.node)) {
        expand_star(*star, item.expr.offset, scope, outputs);
        continue;
      }
      expr(item.expr, scope, env, false);
      if (!item.alias.empty()) {
        outputs.push_back(text::to_lower(item.alias));
        scope.output_aliases.push_back(text::to_lower(item.alias));
      } else if (const auto* col = std::get_if<ColumnRef>(&item.expr.node)) {
        outputs.push_back(text::to_lower(col->name));
      } else {
        outputs.push_back(text::to_lower(to_sql(item.expr)));
      }
    }
    if (c.where) expr(*c.where, scope, env, false);
    for (const auto& g : c.group_by) expr(g, scope, env, true);
    if (c.having) expr(*c.having, scope, env, true);
    if (order_by != nullptr) {
      for (const auto& item : *order_by) expr(item.expr, scope, env, true);
    }
    return outputs;
  }

  void expand_star(const Star& star, std::size_t at, const Scope& scope,
                   std::vector<std::string>& outputs) {
    if (star.qualifier.empty()) {
      if (scope.sources.empty()) report("unknown_column", at, "'*' used without a FROM clause");
      for (const auto& s : scope.sources) {
        outputs.insert(outputs.end(), s.columns.begin(), s.columns.end());
      }
      return;
    }
    for (const auto& s : scope.sources) {
      if (text::iequals(s.name, star.qualifier)) {
        outputs.insert(outputs.end(), s.columns.begin(), s.columns.end());
        return;
      }
    }
    report("unknown_table", at, "unknown table or alias '" + star.qualifier + "'");
  }

  void add_sources(const TableRef& ref, Scope& scope, const CteEnv* env, const Scope* outer,
                   std::vector<const Expr*>& join_conditions) {
    if (const auto* t = std::get_if<NamedTable>(&ref.node)) {
      Source src;
      src.name = text::to_lower(t->alias.empty() ? t->name : t->alias);
      if (const auto* cte_cols = env != nullptr ? env->find(t->name) : nullptr) {
        src.columns = *cte_cols;
        src.open = cte_cols->empty();
      } else if (const auto* table = catalog_.find_table(t->name)) {
        if (!policy_.allowed_tables.empty() &&
            policy_.allowed_tables.count(text::to_lower(t->name)) == 0) {
          report("table_not_allowed", ref.offset, "table '" + t->name + "' is not allowed by policy");
        }
        for (const auto& col : table->columns) src.columns.push_back(col.name);
      } else {
        report("unknown_table", ref.offset, "unknown table '" + t->name + "'");
        src.open = true;
      }
      scope.sources.push_back(std::move(src));
    } else if (const auto* d = std::get_if<DerivedTable>(&ref.node)) {
      Source src;
      src.name = text::to_lower(d->alias);
      src.columns = query(*d->query, env, outer);
      scope.sources.push_back(std::move(src));
    } else {
      const auto& j = std::get<JoinedTable>(ref.node);
      add_sources(*j.left, scope, env, outer, join_conditions);
      add_sources(*j.right, scope, env, outer, join_conditions);
      if (j.on) join_conditions.push_back(&*j.on);
      for (const auto& u : j.using_columns) scope.using_columns.push_back(text::to_lower(u));
    }
  }

  void column(const ColumnRef& col, std::size_t at, const Scope& scope, bool allow_aliases) {
    if (!col.qualifier.empty()) {
      for (const Scope* s = &scope; s != nullptr; s = s->parent) {
        for (const auto& src : s->sources) {
          if (!text::iequals(src.name, col.qualifier)) continue;
          if (!src.open && !contains_icase(src.columns, col.name)) {
            report("unknown_column", at,
                   "column '" + col.qualifier + "." + col.name + "' does not exist");
          }
          return;
        }
      }
      report("unknown_table", at, "unknown table or alias '" + col.qualifier + "'");
      return;
    }
    for (const Scope* s = &scope; s != nullptr; s = s->parent) {
      int definite = 0;
      bool open = false;
      for (const auto& src : s->sources) {
        if (src.open) open = true;
        if (contains_icase(src.columns, col.name)) ++definite;
      }
      if (definite > 1 && !contains_icase(s->using_columns, col.name)) {
        report("ambiguous_column", at, "column '" + col.name + "' is ambiguous");
        return;
      }
      if (definite >= 1 || open) return;
      if (s == &scope && allow_aliases && contains_icase(s->output_aliases, col.name)) return;
    }
    report("unknown_column", at, "column '" + col.name + "' does not exist");
  }

  void expr(const Expr& e, const Scope& scope, const CteEnv* env, bool allow_aliases) {
    struct Visitor {
      Resolver& r;
      const Expr& e;
      const Scope& scope;
      const CteEnv* env;
      bool aliases;

      void operator()(const Literal&) const {}
      void operator()(const ColumnRef& col) const { r.column(col, e.offset, scope, aliases); }
      void operator()(const Star&) const {
        r.report("unknown_column", e.offset, "'*' is only valid as a select item");
      }
      void operator()(const UnaryOp& u) const { r.expr(*u.operand, scope, env, aliases); }
      void operator()(const BinaryOp& b) const {
        r.expr(*b.lhs, scope, env, aliases);
        r.expr(*b.rhs, scope, env, aliases);
      }
      void operator()(const FunctionCall& f) const {
        if (std::find(std::begin(k_forbidden_functions), std::end(k_forbidden_functions),
                      text::to_lower(f.name)) != std::end(k_forbidden_functions)) {
          r.report("forbidden_function", e.offset, "function '" + f.name + "' is not allowed");
        }
        for (const auto& a : f.args) r.expr(a, scope, env, aliases);
      }
      void operator()(const CaseExpr& c) const {
        if (c.operand) r.expr(*c.operand, scope, env, aliases);
        for (const auto& w : c.whens) {
          r.expr(w.condition, scope, env, aliases);
          r.expr(w.result, scope, env, aliases);
        }
        if (c.otherwise) r.expr(*c.otherwise, scope, env, aliases);
      }
      void operator()(const CastExpr& c) const { r.expr(*c.operand, scope, env, aliases); }
      void operator()(const BetweenExpr& b) const {
        r.expr(*b.value, scope, env, aliases);
        r.expr(*b.low, scope, env, aliases);
        r.expr(*b.high, scope, env, aliases);
      }
      void operator()(const InExpr& in) const {
        r.expr(*in.value, scope, env, aliases);
        for (const auto& item : in.list) r.expr(item, scope, env, aliases);
        if (in.subquery) r.query(*in.subquery, env, &scope);
      }
      void operator()(const ExistsExpr& ex) const { r.query(*ex.query, env, &scope); }
      void operator()(const SubqueryExpr& sub) const { r.query(*sub.query, env, &scope); }
    };
    std::visit(Visitor{*this, e, scope, env, allow_aliases}, e.node);
  }

  void report(std::string rule, std::size_t at, std::string message) {
    out_.push_back(Violation{std::move(rule), at, std::move(message), false});
  }

  const store::SchemaCatalog& catalog_;
  const QueryPolicy& policy_;
  std::vector<Violation>& out_;
};

bool references_quarter_table(const Query& q, const store::SchemaCatalog& catalog) {
  bool found = false;
  TreeWalker walker;
  walker.on_table = [&](const NamedTable& t) {
    if (const auto* table = catalog.find_table(t.name); table && table->find_column("quarter")) {
      found = true;
    }
  };
  walker.query(q);
  return found;
}

std::optional<long long> integer_literal(const Expr& e) {
  const auto* lit = std::get_if<Literal>(&e.node);
  if (lit == nullptr || lit->type != Literal::Type::integer) return std::nullopt;
  long long value = 0;
  const auto* begin = lit->text.data();
  const auto* end = begin + lit->text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return value;
}

}  // namespace

bool has_quarter_condition(const Query& query) {
  bool found = false;
  TreeWalker walker;
  walker.on_expr = [&](const Expr& e) {
    if (const auto* b = std::get_if<BinaryOp>(&e.node)) {
      static constexpr std::string_view k_comparisons[] = {"=", "<>", "<", "<=", ">",
                                                           ">=", "IS", "IS NOT"};
      if (std::find(std::begin(k_comparisons), std::end(k_comparisons), b->op) !=
              std::end(k_comparisons) &&
          (is_quarter_column(*b->lhs) || is_quarter_column(*b->rhs))) {
        found = true;
      }
    } else if (const auto* between = std::get_if<BetweenExpr>(&e.node)) {
      if (is_quarter_column(*between->value)) found = true;
    } else if (const auto* in = std::get_if<InExpr>(&e.node)) {
      if (is_quarter_column(*in->value)) found = true;
    }
  };
  walker.query(query);
  return found;
}

ValidationReport validate(const Script& script, const store::SchemaCatalog& catalog,
                          const QueryPolicy& policy) {
  ValidationReport report;
  auto& v = report.violations;

  // (1) single statement
  if (script.statements.size() != 1) {
    const std::size_t at = script.statements.size() > 1 ? script.statements[1].offset : 0;
    v.push_back({"single_statement", at,
                 "expected exactly one statement, found " + std::to_string(script.statements.size()),
                 false});
  }

  // (2) statement class
  for (const auto& stmt : script.statements) {
    if (const auto* other = std::get_if<OtherStatement>(&stmt.body)) {
      v.push_back({"read_only", stmt.offset,
                   other->head + " statements are not allowed; only SELECT queries may run", false});
    }
  }

  for (const auto& stmt : script.statements) {
    const auto* q = std::get_if<Query>(&stmt.body);
    if (q == nullptr) continue;
    if (!q->ctes.empty() && !policy.allow_ctes) {
      v.push_back({"cte_not_allowed", stmt.offset, "WITH clauses are disabled by policy", false});
    }
    // (3) tables and columns
    Resolver resolver(catalog, policy, v);
    resolver.query(*q, nullptr, nullptr);
    // (4) quarter condition
    if (policy.require_quarter_condition && references_quarter_table(*q, catalog) &&
        !has_quarter_condition(*q)) {
      v.push_back({"quarter_condition", stmt.offset,
                   "query must filter on `quarter` (use quarter = 0 for annual reports)", false});
    }
  }

  const bool rejected = std::any_of(v.begin(), v.end(), [](const Violation& x) { return !x.rewritable; });

  // (5) LIMIT, only meaningful for a lone query
  if (script.statements.size() == 1 && script.statements[0].is_query()) {
    Query q = std::get<Query>(script.statements[0].body);
    const std::size_t at = script.statements[0].offset;
    bool rewrite = false;
    if (!q.limit) {
      if (policy.require_limit) {
        v.push_back({"limit", at, "LIMIT missing; appended LIMIT " + std::to_string(policy.max_limit),
                     true});
        q.limit = Expr{Literal{Literal::Type::integer, std::to_string(policy.max_limit)}, 0};
        rewrite = true;
      }
    } else if (const auto value = integer_literal(*q.limit)) {
      if (static_cast<unsigned long long>(*value) > policy.max_limit) {
        v.push_back({"limit", q.limit->offset,
                     "LIMIT " + std::to_string(*value) + " clamped to " +
                         std::to_string(policy.max_limit),
                     true});
        q.limit = Expr{Literal{Literal::Type::integer, std::to_string(policy.max_limit)}, 0};
        rewrite = true;
      }
    } else {
      v.push_back({"limit", q.limit->offset, "LIMIT must be a non-negative integer literal", false});
    }
    const bool now_rejected =
        std::any_of(v.begin(), v.end(), [](const Violation& x) { return !x.rewritable; });
    if (now_rejected) {
      report.verdict = Verdict::reject;
    } else if (rewrite) {
      report.verdict = Verdict::rewritten;
      report.rewritten_sql = to_sql(q);
    } else {
      report.verdict = Verdict::pass;
    }
    return report;
  }

  report.verdict = rejected || !v.empty() ? Verdict::reject : Verdict::pass;
  return report;
}

ValidationReport check_sql(std::string_view sql, const store::SchemaCatalog& catalog,
                           const QueryPolicy& policy) {
  auto parsed = parse_sql(sql);
  if (const auto* err = std::get_if<SyntaxError>(&parsed)) {
    ValidationReport report;
    report.verdict = Verdict::reject;
    report.violations.push_back({"syntax", err->offset, err->message, false});
    return report;
  }
  return validate(std::get<Script>(parsed), catalog, policy);
}

}  // namespace finstat::guard
