#include "finstat/guard/parser.hpp"

#include <utility>

#include "finstat/core/text.hpp"

namespace finstat::guard {
namespace {

class Parser {
 public:
  Parser(std::string_view source, std::vector<Token> tokens)
      : source_(source), tokens_(std::move(tokens)) {}

  Script parse_script() {
    Script script;
    while (true) {
      while (accept_symbol(";")) {
      }
      if (at_end()) break;
      script.statements.push_back(parse_statement());
      if (at_end()) break;
      if (!accept_symbol(";")) fail("expected ';' or end of input");
    }
    if (script.statements.empty()) throw SyntaxException(source_.size(), "empty statement");
    return script;
  }

  Query parse_lone_query() {
    while (accept_symbol(";")) {
    }
    if (!peek_keyword("SELECT") && !peek_keyword("WITH")) fail("expected SELECT or WITH");
    Query q = parse_query();
    while (accept_symbol(";")) {
    }
    if (!at_end()) fail("unexpected input after query");
    return q;
  }

 private:
  // ---- token helpers ----
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t idx = pos_ + ahead;
    return idx < tokens_.size() ? tokens_[idx] : tokens_.back();
  }
  const Token& advance() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == TokenKind::end; }

  bool peek_keyword(std::string_view kw, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokenKind::keyword && t.text == kw;
  }
  bool peek_symbol(std::string_view sym, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokenKind::symbol && t.text == sym;
  }
  bool accept_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) return false;
    advance();
    return true;
  }
  bool accept_symbol(std::string_view sym) {
    if (!peek_symbol(sym)) return false;
    advance();
    return true;
  }
  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail("expected " + std::string(kw));
  }
  void expect_symbol(std::string_view sym) {
    if (!accept_symbol(sym)) fail("expected '" + std::string(sym) + "'");
  }

  [[noreturn]] void fail(const std::string& message) const {
    const Token& t = peek();
    std::string found = t.kind == TokenKind::end ? "end of input" : "'" + t.text + "'";
    throw SyntaxException(t.offset, message + ", found " + found);
  }

  bool peek_identifier() const {
    return peek().kind == TokenKind::identifier || peek().kind == TokenKind::quoted_identifier;
  }

  std::string expect_identifier(std::string_view what) {
    if (!peek_identifier()) fail("expected " + std::string(what));
    return advance().text;
  }

  // ---- statements ----
  Statement parse_statement() {
    const Token& head = peek();
    Statement stmt;
    stmt.offset = head.offset;
    if (peek_keyword("SELECT")) {
      stmt.body = parse_query();
      return stmt;
    }
    if (peek_keyword("WITH")) {
      // A CTE list may front a DML statement; keep it as a foreign statement then.
      const std::size_t save = pos_;
      advance();
      accept_keyword("RECURSIVE");
      std::vector<Cte> ctes = parse_cte_list();
      if (peek_keyword("SELECT")) {
        pos_ = save;
        stmt.body = parse_query();
        return stmt;
      }
      const Token& inner = peek();
      const std::string upper = text::to_upper(inner.text);
      if ((inner.kind == TokenKind::keyword || inner.kind == TokenKind::identifier) &&
          is_foreign_statement_head(upper)) {
        stmt.body = skip_foreign(upper, head.offset);
        return stmt;
      }
      fail("expected SELECT after WITH clause");
    }
    if (head.kind == TokenKind::keyword || head.kind == TokenKind::identifier) {
      const std::string upper = text::to_upper(head.text);
      if (is_foreign_statement_head(upper)) {
        stmt.body = skip_foreign(upper, head.offset);
        return stmt;
      }
    }
    fail("expected a statement");
  }

  OtherStatement skip_foreign(std::string head, std::size_t start) {
    int depth = 0;
    std::size_t end = source_.size();
    while (!at_end()) {
      if (peek_symbol("(")) ++depth;
      if (peek_symbol(")")) --depth;
      if (depth <= 0 && peek_symbol(";")) {
        end = peek().offset;
        break;
      }
      advance();
    }
    return OtherStatement{std::move(head),
                          std::string(text::trim(source_.substr(start, end - start)))};
  }

  // ---- queries ----
  Query parse_query() {
    Query q;
    if (accept_keyword("WITH")) {
      q.recursive = accept_keyword("RECURSIVE");
      q.ctes = parse_cte_list();
    }
    q.core = parse_select_core();
    while (true) {
      CompoundPart part;
      if (accept_keyword("UNION")) {
        part.op = accept_keyword("ALL") ? SetOp::union_all : SetOp::union_distinct;
      } else if (accept_keyword("INTERSECT")) {
        part.op = SetOp::intersect;
      } else if (accept_keyword("EXCEPT")) {
        part.op = SetOp::except;
      } else {
        break;
      }
      part.core = parse_select_core();
      q.compounds.push_back(std::move(part));
    }
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      do {
        OrderItem item;
        item.expr = parse_expr();
        if (accept_keyword("DESC")) {
          item.descending = true;
        } else {
          accept_keyword("ASC");
        }
        if (peek().kind == TokenKind::identifier && peek().text == "nulls") {
          advance();
          if (peek().kind == TokenKind::identifier && peek().text == "first") {
            item.nulls_first = true;
          } else if (peek().kind == TokenKind::identifier && peek().text == "last") {
            item.nulls_first = false;
          } else {
            fail("expected FIRST or LAST after NULLS");
          }
          advance();
        }
        q.order_by.push_back(std::move(item));
      } while (accept_symbol(","));
    }
    if (accept_keyword("LIMIT")) {
      q.limit = parse_expr();
      if (accept_symbol(",")) fail("'LIMIT offset, count' is outside the supported dialect");
      if (accept_keyword("OFFSET")) q.offset = parse_expr();
    }
    if (peek_keyword("FOR")) fail("locking clauses are not supported");
    if (peek_keyword("INTO")) fail("SELECT INTO is not supported");
    return q;
  }

  std::vector<Cte> parse_cte_list() {
    std::vector<Cte> ctes;
    do {
      Cte cte;
      cte.name = expect_identifier("CTE name");
      if (accept_symbol("(")) {
        do {
          cte.columns.push_back(expect_identifier("column name"));
        } while (accept_symbol(","));
        expect_symbol(")");
      }
      expect_keyword("AS");
      expect_symbol("(");
      cte.query = parse_query();
      expect_symbol(")");
      ctes.push_back(std::move(cte));
    } while (accept_symbol(","));
    return ctes;
  }

  SelectCore parse_select_core() {
    expect_keyword("SELECT");
    SelectCore core;
    if (accept_keyword("DISTINCT")) {
      core.distinct = true;
    } else {
      accept_keyword("ALL");
    }
    do {
      core.items.push_back(parse_select_item());
    } while (accept_symbol(","));
    if (peek_keyword("INTO")) fail("SELECT INTO is not supported");
    if (accept_keyword("FROM")) {
      do {
        core.from.push_back(parse_join_tree());
      } while (accept_symbol(","));
    }
    if (accept_keyword("WHERE")) core.where = parse_expr();
    if (accept_keyword("GROUP")) {
      expect_keyword("BY");
      do {
        core.group_by.push_back(parse_expr());
      } while (accept_symbol(","));
    }
    if (accept_keyword("HAVING")) core.having = parse_expr();
    if (peek_keyword("WINDOW")) fail("window clauses are not supported");
    return core;
  }

  SelectItem parse_select_item() {
    SelectItem item;
    const std::size_t at = peek().offset;
    if (accept_symbol("*")) {
      item.expr = Expr{Star{}, at};
      return item;
    }
    item.expr = parse_expr();
    item.alias = parse_optional_alias();
    return item;
  }

  std::string parse_optional_alias() {
    if (accept_keyword("AS")) return expect_identifier("alias");
    if (peek_identifier()) {
      // Bare alias; guard against swallowing a clause keyword spelled as identifier.
      const std::string& t = peek().text;
      if (peek().kind == TokenKind::identifier && (t == "nulls")) return {};
      return advance().text;
    }
    return {};
  }

  TableRef parse_join_tree() {
    TableRef left = parse_table_primary();
    while (true) {
      const std::size_t at = peek().offset;
      JoinKind kind;
      if (peek_keyword("NATURAL")) fail("NATURAL joins are not supported");
      if (accept_keyword("JOIN")) {
        kind = JoinKind::inner;
      } else if (accept_keyword("INNER")) {
        expect_keyword("JOIN");
        kind = JoinKind::inner;
      } else if (accept_keyword("LEFT")) {
        accept_keyword("OUTER");
        expect_keyword("JOIN");
        kind = JoinKind::left;
      } else if (accept_keyword("RIGHT")) {
        accept_keyword("OUTER");
        expect_keyword("JOIN");
        kind = JoinKind::right;
      } else if (accept_keyword("FULL")) {
        accept_keyword("OUTER");
        expect_keyword("JOIN");
        kind = JoinKind::full;
      } else if (accept_keyword("CROSS")) {
        expect_keyword("JOIN");
        kind = JoinKind::cross;
      } else {
        break;
      }
      JoinedTable join;
      join.kind = kind;
      join.left = std::move(left);
      join.right = parse_table_primary();
      if (kind != JoinKind::cross) {
        if (accept_keyword("ON")) {
          join.on = parse_expr();
        } else if (accept_keyword("USING")) {
          expect_symbol("(");
          do {
            join.using_columns.push_back(expect_identifier("column name"));
          } while (accept_symbol(","));
          expect_symbol(")");
        }
      }
      left = TableRef{std::move(join), at};
    }
    return left;
  }

  TableRef parse_table_primary() {
    const std::size_t at = peek().offset;
    if (accept_symbol("(")) {
      if (!peek_keyword("SELECT") && !peek_keyword("WITH")) fail("expected subquery");
      DerivedTable derived;
      derived.query = parse_query();
      expect_symbol(")");
      derived.alias = parse_optional_alias();
      return TableRef{std::move(derived), at};
    }
    NamedTable table;
    table.name = expect_identifier("table name");
    if (peek_symbol(".")) fail("schema-qualified table names are not supported");
    if (peek_symbol("(")) fail("table-valued functions are not supported");
    table.alias = parse_optional_alias();
    return TableRef{std::move(table), at};
  }

  // ---- expressions ----
  Expr parse_expr() { return parse_or(); }

  static Expr binary(std::string op, Expr lhs, Expr rhs) {
    const std::size_t at = lhs.offset;
    return Expr{BinaryOp{std::move(op), std::move(lhs), std::move(rhs)}, at};
  }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (accept_keyword("OR")) lhs = binary("OR", std::move(lhs), parse_and());
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_not();
    while (accept_keyword("AND")) lhs = binary("AND", std::move(lhs), parse_not());
    return lhs;
  }

  Expr parse_not() {
    const std::size_t at = peek().offset;
    if (peek_keyword("NOT") && !peek_keyword("EXISTS", 1)) {
      advance();
      return Expr{UnaryOp{"NOT", parse_not()}, at};
    }
    return parse_comparison();
  }

  Expr parse_comparison() {
    Expr lhs = parse_additive();
    while (true) {
      const Token& t = peek();
      if (t.kind == TokenKind::symbol &&
          (t.text == "=" || t.text == "<>" || t.text == "<" || t.text == "<=" || t.text == ">" ||
           t.text == ">=")) {
        std::string op = advance().text;
        lhs = binary(std::move(op), std::move(lhs), parse_additive());
        continue;
      }
      if (accept_keyword("IS")) {
        const bool negated = accept_keyword("NOT");
        lhs = binary(negated ? "IS NOT" : "IS", std::move(lhs), parse_additive());
        continue;
      }
      bool negated = false;
      if (peek_keyword("NOT") &&
          (peek_keyword("LIKE", 1) || peek_keyword("BETWEEN", 1) || peek_keyword("IN", 1))) {
        advance();
        negated = true;
      }
      if (accept_keyword("LIKE")) {
        lhs = binary(negated ? "NOT LIKE" : "LIKE", std::move(lhs), parse_additive());
        continue;
      }
      if (accept_keyword("BETWEEN")) {
        const std::size_t at = lhs.offset;
        BetweenExpr between;
        between.value = std::move(lhs);
        between.low = parse_additive();
        expect_keyword("AND");
        between.high = parse_additive();
        between.negated = negated;
        lhs = Expr{std::move(between), at};
        continue;
      }
      if (accept_keyword("IN")) {
        const std::size_t at = lhs.offset;
        InExpr in;
        in.value = std::move(lhs);
        in.negated = negated;
        expect_symbol("(");
        if (peek_keyword("SELECT") || peek_keyword("WITH")) {
          in.subquery = parse_query();
        } else if (!peek_symbol(")")) {
          do {
            in.list.push_back(parse_expr());
          } while (accept_symbol(","));
        }
        expect_symbol(")");
        lhs = Expr{std::move(in), at};
        continue;
      }
      if (negated) fail("expected LIKE, BETWEEN or IN after NOT");
      break;
    }
    return lhs;
  }

  Expr parse_additive() {
    Expr lhs = parse_multiplicative();
    while (peek_symbol("+") || peek_symbol("-")) {
      std::string op = advance().text;
      lhs = binary(std::move(op), std::move(lhs), parse_multiplicative());
    }
    return lhs;
  }

  Expr parse_multiplicative() {
    Expr lhs = parse_concat();
    while (peek_symbol("*") || peek_symbol("/") || peek_symbol("%")) {
      std::string op = advance().text;
      lhs = binary(std::move(op), std::move(lhs), parse_concat());
    }
    return lhs;
  }

  Expr parse_concat() {
    Expr lhs = parse_unary();
    while (accept_symbol("||")) lhs = binary("||", std::move(lhs), parse_unary());
    return lhs;
  }

  Expr parse_unary() {
    const std::size_t at = peek().offset;
    if (peek_symbol("-") || peek_symbol("+")) {
      std::string op = advance().text;
      return Expr{UnaryOp{std::move(op), parse_unary()}, at};
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token& t = peek();
    const std::size_t at = t.offset;
    switch (t.kind) {
      case TokenKind::integer:
        return Expr{Literal{Literal::Type::integer, advance().text}, at};
      case TokenKind::real:
        return Expr{Literal{Literal::Type::real, advance().text}, at};
      case TokenKind::string:
        return Expr{Literal{Literal::Type::string, advance().text}, at};
      case TokenKind::keyword:
        return parse_keyword_primary();
      case TokenKind::identifier:
      case TokenKind::quoted_identifier:
        return parse_name_primary();
      case TokenKind::symbol:
        if (accept_symbol("(")) {
          if (peek_keyword("SELECT") || peek_keyword("WITH")) {
            SubqueryExpr sub{parse_query()};
            expect_symbol(")");
            return Expr{std::move(sub), at};
          }
          Expr inner = parse_expr();
          if (peek_symbol(",")) fail("row values are not supported");
          expect_symbol(")");
          return inner;
        }
        break;
      case TokenKind::end:
        break;
    }
    fail("expected an expression");
  }

  Expr parse_keyword_primary() {
    const std::size_t at = peek().offset;
    if (accept_keyword("NULL")) return Expr{Literal{Literal::Type::null, "NULL"}, at};
    if (accept_keyword("TRUE")) return Expr{Literal{Literal::Type::boolean, "TRUE"}, at};
    if (accept_keyword("FALSE")) return Expr{Literal{Literal::Type::boolean, "FALSE"}, at};
    if (peek_keyword("NOT") && peek_keyword("EXISTS", 1)) {
      advance();
      advance();
      return Expr{ExistsExpr{parse_parenthesized_query(), true}, at};
    }
    if (accept_keyword("EXISTS")) return Expr{ExistsExpr{parse_parenthesized_query(), false}, at};
    if (accept_keyword("CASE")) return parse_case(at);
    if (accept_keyword("CAST")) {
      expect_symbol("(");
      CastExpr cast;
      cast.operand = parse_expr();
      expect_keyword("AS");
      cast.type_name = parse_type_name();
      expect_symbol(")");
      return Expr{std::move(cast), at};
    }
    if (peek_keyword("LEFT") || peek_keyword("RIGHT")) {
      if (peek_symbol("(", 1)) return parse_function(text::to_lower(advance().text), at);
    }
    fail("expected an expression");
  }

  Query parse_parenthesized_query() {
    expect_symbol("(");
    if (!peek_keyword("SELECT") && !peek_keyword("WITH")) fail("expected subquery");
    Query q = parse_query();
    expect_symbol(")");
    return q;
  }

  std::string parse_type_name() {
    std::string name = expect_identifier("type name");
    while (peek().kind == TokenKind::identifier) name += " " + advance().text;
    if (accept_symbol("(")) {
      name += "(";
      do {
        if (peek().kind != TokenKind::integer) fail("expected type modifier");
        name += advance().text;
        if (peek_symbol(",")) name += ",";
      } while (accept_symbol(","));
      expect_symbol(")");
      name += ")";
    }
    return name;
  }

  Expr parse_case(std::size_t at) {
    CaseExpr c;
    if (!peek_keyword("WHEN")) c.operand = parse_expr();
    while (accept_keyword("WHEN")) {
      Expr cond = parse_expr();
      expect_keyword("THEN");
      Expr result = parse_expr();
      c.whens.push_back(WhenClause{std::move(cond), std::move(result)});
    }
    if (c.whens.empty()) fail("expected WHEN");
    if (accept_keyword("ELSE")) c.otherwise = parse_expr();
    expect_keyword("END");
    return Expr{std::move(c), at};
  }

  Expr parse_name_primary() {
    const std::size_t at = peek().offset;
    const bool quoted = peek().kind == TokenKind::quoted_identifier;
    std::string first = advance().text;
    if (!quoted && peek_symbol("(")) return parse_function(std::move(first), at);
    if (accept_symbol(".")) {
      if (accept_symbol("*")) return Expr{Star{std::move(first)}, at};
      std::string second = expect_identifier("column name");
      if (peek_symbol(".")) fail("schema-qualified column names are not supported");
      return Expr{ColumnRef{std::move(first), std::move(second)}, at};
    }
    return Expr{ColumnRef{"", std::move(first)}, at};
  }

  Expr parse_function(std::string name, std::size_t at) {
    expect_symbol("(");
    FunctionCall call;
    call.name = std::move(name);
    if (accept_symbol("*")) {
      call.star = true;
    } else if (!peek_symbol(")")) {
      if (accept_keyword("DISTINCT")) call.distinct = true;
      do {
        call.args.push_back(parse_expr());
      } while (accept_symbol(","));
    }
    expect_symbol(")");
    if (peek_keyword("OVER")) fail("window functions are not supported");
    if (peek().kind == TokenKind::identifier && peek().text == "filter" && peek_symbol("(", 1)) {
      fail("aggregate FILTER clauses are not supported");
    }
    return Expr{std::move(call), at};
  }

  std::string_view source_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

ParseResult parse_sql(std::string_view sql) {
  try {
    Parser parser(sql, tokenize(sql));
    return parser.parse_script();
  } catch (const SyntaxException& e) {
    return SyntaxError{e.offset(), e.what()};
  }
}

Query parse_single_query(std::string_view sql) {
  Parser parser(sql, tokenize(sql));
  return parser.parse_lone_query();
}

}  // namespace finstat::guard
