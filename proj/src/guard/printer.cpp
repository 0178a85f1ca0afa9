#include "finstat/guard/printer.hpp"

#include <cctype>

#include "finstat/core/text.hpp"
#include "finstat/guard/lexer.hpp"

namespace finstat::guard {
namespace {

enum Precedence : int {
  k_or = 1,
  k_and = 2,
  k_not = 3,
  k_comparison = 4,
  k_additive = 5,
  k_multiplicative = 6,
  k_concat = 7,
  k_unary = 8,
  k_primary = 9,
};

int binary_precedence(const std::string& op) {
  if (op == "OR") return k_or;
  if (op == "AND") return k_and;
  if (op == "+" || op == "-") return k_additive;
  if (op == "*" || op == "/" || op == "%") return k_multiplicative;
  if (op == "||") return k_concat;
  return k_comparison;
}

int precedence(const Expr& e) {
  if (const auto* b = std::get_if<BinaryOp>(&e.node)) return binary_precedence(b->op);
  if (const auto* u = std::get_if<UnaryOp>(&e.node)) return u->op == "NOT" ? k_not : k_unary;
  if (std::holds_alternative<BetweenExpr>(e.node) || std::holds_alternative<InExpr>(e.node)) {
    return k_comparison;
  }
  return k_primary;
}

void print_query(std::string& out, const Query& q);
void print_expr(std::string& out, const Expr& e);

// Wraps the child when its precedence is below `min_prec`.
void print_child(std::string& out, const Expr& e, int min_prec) {
  if (precedence(e) < min_prec) {
    out += '(';
    print_expr(out, e);
    out += ')';
  } else {
    print_expr(out, e);
  }
}

void print_string_literal(std::string& out, const std::string& value) {
  out += '\'';
  for (char c : value) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
}

void print_expr(std::string& out, const Expr& e) {
  struct Visitor {
    std::string& out;

    void operator()(const Literal& lit) const {
      if (lit.type == Literal::Type::string) {
        print_string_literal(out, lit.text);
      } else {
        out += lit.text;
      }
    }
    void operator()(const ColumnRef& col) const {
      if (!col.qualifier.empty()) {
        out += quote_identifier_if_needed(col.qualifier);
        out += '.';
      }
      out += quote_identifier_if_needed(col.name);
    }
    void operator()(const Star& star) const {
      if (!star.qualifier.empty()) {
        out += quote_identifier_if_needed(star.qualifier);
        out += '.';
      }
      out += '*';
    }
    void operator()(const UnaryOp& u) const {
      if (u.op == "NOT") {
        out += "NOT ";
        if (std::holds_alternative<ExistsExpr>(u.operand->node)) {
          out += '(';
          print_expr(out, *u.operand);
          out += ')';
          return;
        }
        print_child(out, *u.operand, k_not);
        return;
      }
      out += u.op;
      const Expr& operand = *u.operand;
      // "--" would start a comment; nested signs are always parenthesized.
      if (const auto* inner = std::get_if<UnaryOp>(&operand.node); inner && inner->op != "NOT") {
        out += '(';
        print_expr(out, operand);
        out += ')';
        return;
      }
      print_child(out, operand, k_unary);
    }
    void operator()(const BinaryOp& b) const {
      const int p = binary_precedence(b.op);
      // Left-associative: equal precedence on the left is implicit, on the right it needs parens.
      // Comparisons are parsed from additive operands, so their children must bind tighter.
      const int left_min = p == k_comparison ? k_comparison + 1 : p;
      print_child(out, *b.lhs, left_min);
      out += ' ';
      out += b.op;
      out += ' ';
      print_child(out, *b.rhs, p + 1);
    }
    void operator()(const FunctionCall& f) const {
      out += quote_identifier_if_needed(f.name);
      out += '(';
      if (f.star) {
        out += '*';
      } else {
        if (f.distinct) out += "DISTINCT ";
        for (std::size_t i = 0; i < f.args.size(); ++i) {
          if (i > 0) out += ", ";
          print_expr(out, f.args[i]);
        }
      }
      out += ')';
    }
    void operator()(const CaseExpr& c) const {
      out += "CASE";
      if (c.operand) {
        out += ' ';
        print_expr(out, *c.operand);
      }
      for (const auto& w : c.whens) {
        out += " WHEN ";
        print_expr(out, w.condition);
        out += " THEN ";
        print_expr(out, w.result);
      }
      if (c.otherwise) {
        out += " ELSE ";
        print_expr(out, *c.otherwise);
      }
      out += " END";
    }
    void operator()(const CastExpr& c) const {
      out += "CAST(";
      print_expr(out, *c.operand);
      out += " AS ";
      out += c.type_name;
      out += ')';
    }
    void operator()(const BetweenExpr& b) const {
      print_child(out, *b.value, k_additive);
      out += b.negated ? " NOT BETWEEN " : " BETWEEN ";
      print_child(out, *b.low, k_additive);
      out += " AND ";
      print_child(out, *b.high, k_additive);
    }
    void operator()(const InExpr& in) const {
      print_child(out, *in.value, k_additive);
      out += in.negated ? " NOT IN (" : " IN (";
      if (in.subquery) {
        print_query(out, *in.subquery);
      } else {
        for (std::size_t i = 0; i < in.list.size(); ++i) {
          if (i > 0) out += ", ";
          print_expr(out, in.list[i]);
        }
      }
      out += ')';
    }
    void operator()(const ExistsExpr& ex) const {
      out += ex.negated ? "NOT EXISTS (" : "EXISTS (";
      print_query(out, *ex.query);
      out += ')';
    }
    void operator()(const SubqueryExpr& sub) const {
      out += '(';
      print_query(out, *sub.query);
      out += ')';
    }
  };
  std::visit(Visitor{out}, e.node);
}

void print_alias(std::string& out, const std::string& alias) {
  if (alias.empty()) return;
  out += " AS ";
  out += quote_identifier_if_needed(alias);
}

void print_table_ref(std::string& out, const TableRef& ref) {
  if (const auto* t = std::get_if<NamedTable>(&ref.node)) {
    out += quote_identifier_if_needed(t->name);
    print_alias(out, t->alias);
  } else if (const auto* d = std::get_if<DerivedTable>(&ref.node)) {
    out += '(';
    print_query(out, *d->query);
    out += ')';
    print_alias(out, d->alias);
  } else {
    const auto& j = std::get<JoinedTable>(ref.node);
    print_table_ref(out, *j.left);
    switch (j.kind) {
      case JoinKind::inner: out += " JOIN "; break;
      case JoinKind::left: out += " LEFT JOIN "; break;
      case JoinKind::right: out += " RIGHT JOIN "; break;
      case JoinKind::full: out += " FULL JOIN "; break;
      case JoinKind::cross: out += " CROSS JOIN "; break;
    }
    print_table_ref(out, *j.right);
    if (j.on) {
      out += " ON ";
      print_expr(out, *j.on);
    } else if (!j.using_columns.empty()) {
      out += " USING (";
      for (std::size_t i = 0; i < j.using_columns.size(); ++i) {
        if (i > 0) out += ", ";
        out += quote_identifier_if_needed(j.using_columns[i]);
      }
      out += ')';
    }
  }
}

void print_core(std::string& out, const SelectCore& core) {
  out += core.distinct ? "SELECT DISTINCT " : "SELECT ";
  for (std::size_t i = 0; i < core.items.size(); ++i) {
    if (i > 0) out += ", ";
    print_expr(out, core.items[i].expr);
    print_alias(out, core.items[i].alias);
  }
  if (!core.from.empty()) {
    out += " FROM ";
    for (std::size_t i = 0; i < core.from.size(); ++i) {
      if (i > 0) out += ", ";
      print_table_ref(out, core.from[i]);
    }
  }
  if (core.where) {
    out += " WHERE ";
    print_expr(out, *core.where);
  }
  if (!core.group_by.empty()) {
    out += " GROUP BY ";
    for (std::size_t i = 0; i < core.group_by.size(); ++i) {
      if (i > 0) out += ", ";
      print_expr(out, core.group_by[i]);
    }
  }
  if (core.having) {
    out += " HAVING ";
    print_expr(out, *core.having);
  }
}

void print_query(std::string& out, const Query& q) {
  if (!q.ctes.empty()) {
    out += q.recursive ? "WITH RECURSIVE " : "WITH ";
    for (std::size_t i = 0; i < q.ctes.size(); ++i) {
      if (i > 0) out += ", ";
      const Cte& cte = q.ctes[i];
      out += quote_identifier_if_needed(cte.name);
      if (!cte.columns.empty()) {
        out += " (";
        for (std::size_t c = 0; c < cte.columns.size(); ++c) {
          if (c > 0) out += ", ";
          out += quote_identifier_if_needed(cte.columns[c]);
        }
        out += ')';
      }
      out += " AS (";
      print_query(out, *cte.query);
      out += ')';
    }
    out += ' ';
  }
  print_core(out, q.core);
  for (const auto& part : q.compounds) {
    switch (part.op) {
      case SetOp::union_distinct: out += " UNION "; break;
      case SetOp::union_all: out += " UNION ALL "; break;
      case SetOp::intersect: out += " INTERSECT "; break;
      case SetOp::except: out += " EXCEPT "; break;
    }
    print_core(out, part.core);
  }
  if (!q.order_by.empty()) {
    out += " ORDER BY ";
    for (std::size_t i = 0; i < q.order_by.size(); ++i) {
      if (i > 0) out += ", ";
      const OrderItem& item = q.order_by[i];
      print_expr(out, item.expr);
      if (item.descending) out += " DESC";
      if (item.nulls_first) out += *item.nulls_first ? " NULLS FIRST" : " NULLS LAST";
    }
  }
  if (q.limit) {
    out += " LIMIT ";
    print_expr(out, *q.limit);
    if (q.offset) {
      out += " OFFSET ";
      print_expr(out, *q.offset);
    }
  }
}

}  // namespace

std::string quote_identifier_if_needed(const std::string& name) {
  bool plain = !name.empty() && (std::islower(static_cast<unsigned char>(name[0])) != 0 || name[0] == '_');
  for (char c : name) {
    const auto uc = static_cast<unsigned char>(c);
    if (!(std::islower(uc) != 0 || std::isdigit(uc) != 0 || c == '_')) plain = false;
  }
  if (plain && !is_reserved_keyword(text::to_upper(name)) && name != "nulls") return name;
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string to_sql(const Query& query) {
  std::string out;
  print_query(out, query);
  return out;
}

std::string to_sql(const Expr& expr) {
  std::string out;
  print_expr(out, expr);
  return out;
}

std::string to_sql(const Statement& statement) {
  if (const auto* q = std::get_if<Query>(&statement.body)) return to_sql(*q);
  return std::get<OtherStatement>(statement.body).text;
}

std::string to_sql(const Script& script) {
  std::string out;
  for (std::size_t i = 0; i < script.statements.size(); ++i) {
    if (i > 0) out += "; ";
    out += to_sql(script.statements[i]);
  }
  return out;
}

}  // namespace finstat::guard
