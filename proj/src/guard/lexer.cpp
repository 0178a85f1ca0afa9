#include "finstat/guard/lexer.hpp"

#include <algorithm>
#include <iterator>
#include <cctype>

#include "finstat/core/text.hpp"

namespace finstat::guard {
namespace {

constexpr std::string_view k_reserved[] = {
    "ALL",      "ALTER",  "AND",    "AS",        "ASC",     "ATTACH",  "BETWEEN", "BY",
    "CASE",     "CAST",   "CREATE", "CROSS",     "DELETE",  "DESC",    "DETACH",  "DISTINCT",
    "DROP",     "ELSE",   "END",    "EXCEPT",    "EXISTS",  "FALSE",   "FOR",     "FROM",
    "FULL",     "GRANT",  "GROUP",  "HAVING",    "IN",      "INNER",   "INSERT",  "INTERSECT",
    "INTO",     "IS",     "JOIN",   "LEFT",      "LIKE",    "LIMIT",   "MERGE",   "NATURAL",
    "NOT",      "NULL",   "OFFSET", "ON",        "OR",      "ORDER",   "OUTER",   "OVER",
    "PRAGMA",   "REVOKE", "RIGHT",  "SELECT",    "THEN",    "TRUE",    "TRUNCATE", "UNION",
    "UPDATE",   "USING",  "VACUUM", "VALUES",    "WHEN",    "WHERE",
};

constexpr std::string_view k_reserved_extra[] = {"WITH", "RECURSIVE", "WINDOW"};

constexpr std::string_view k_foreign_heads[] = {
    "INSERT",  "UPDATE",  "DELETE",    "DROP",     "ALTER",   "CREATE",  "TRUNCATE", "GRANT",
    "REVOKE",  "MERGE",   "ATTACH",    "DETACH",   "PRAGMA",  "VACUUM",  "VALUES",   "REPLACE",
    "UPSERT",  "REINDEX", "ANALYZE",   "BEGIN",    "COMMIT",  "END",     "ROLLBACK", "SAVEPOINT",
    "RELEASE", "COPY",    "CALL",      "EXEC",     "EXECUTE", "SET",     "LOCK",     "UNLOCK",
    "LOAD",    "DO",      "COMMENT",   "RENAME",   "EXPLAIN", "SHOW",    "USE",      "DECLARE",
    "PREPARE", "REFRESH", "CLUSTER",   "DISCARD",
};

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool is_ident_char(char c) {
  return is_ident_start(c) || std::isdigit(static_cast<unsigned char>(c)) != 0 || c == '$';
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace

bool is_reserved_keyword(std::string_view upper) {
  return std::find(std::begin(k_reserved), std::end(k_reserved), upper) != std::end(k_reserved) ||
         std::find(std::begin(k_reserved_extra), std::end(k_reserved_extra), upper) !=
             std::end(k_reserved_extra);
}

bool is_foreign_statement_head(std::string_view upper) {
  return std::find(std::begin(k_foreign_heads), std::end(k_foreign_heads), upper) !=
         std::end(k_foreign_heads);
}

std::vector<Token> tokenize(std::string_view sql) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = sql.size();

  while (i < n) {
    const char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
      while (i < n && sql[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
      const auto close = sql.find("*/", i + 2);
      if (close == std::string_view::npos) throw SyntaxException(i, "unterminated block comment");
      i = close + 2;
      continue;
    }

    const std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < n && is_ident_char(sql[i])) ++i;
      const auto word = sql.substr(start, i - start);
      auto upper = text::to_upper(word);
      if (is_reserved_keyword(upper)) {
        tokens.push_back({TokenKind::keyword, std::move(upper), start});
      } else {
        tokens.push_back({TokenKind::identifier, text::to_lower(word), start});
      }
      continue;
    }
    if (c == '"') {
      std::string value;
      ++i;
      while (true) {
        if (i >= n) throw SyntaxException(start, "unterminated quoted identifier");
        if (sql[i] == '"') {
          if (i + 1 < n && sql[i + 1] == '"') {
            value.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        value.push_back(sql[i++]);
      }
      if (value.empty()) throw SyntaxException(start, "empty quoted identifier");
      tokens.push_back({TokenKind::quoted_identifier, std::move(value), start});
      continue;
    }
    if (c == '\'') {
      std::string value;
      ++i;
      while (true) {
        if (i >= n) throw SyntaxException(start, "unterminated string literal");
        if (sql[i] == '\'') {
          if (i + 1 < n && sql[i + 1] == '\'') {
            value.push_back('\'');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        value.push_back(sql[i++]);
      }
      tokens.push_back({TokenKind::string, std::move(value), start});
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(sql[i + 1]))) {
      bool real = false;
      while (i < n && is_digit(sql[i])) ++i;
      if (i < n && sql[i] == '.') {
        real = true;
        ++i;
        while (i < n && is_digit(sql[i])) ++i;
      }
      if (i < n && (sql[i] == 'e' || sql[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < n && (sql[j] == '+' || sql[j] == '-')) ++j;
        if (j < n && is_digit(sql[j])) {
          real = true;
          i = j;
          while (i < n && is_digit(sql[i])) ++i;
        }
      }
      if (i < n && is_ident_start(sql[i])) {
        throw SyntaxException(i, "unexpected character after number");
      }
      tokens.push_back({real ? TokenKind::real : TokenKind::integer,
                        std::string(sql.substr(start, i - start)), start});
      continue;
    }

    const auto two = sql.substr(i, 2);
    if (two == "<=" || two == ">=" || two == "<>" || two == "||") {
      tokens.push_back({TokenKind::symbol, std::string(two), start});
      i += 2;
      continue;
    }
    if (two == "!=") {
      tokens.push_back({TokenKind::symbol, "<>", start});
      i += 2;
      continue;
    }
    if (two == "==") {
      tokens.push_back({TokenKind::symbol, "=", start});
      i += 2;
      continue;
    }
    if (two == "::") throw SyntaxException(start, "'::' casts are outside the supported dialect");
    switch (c) {
      case '=':
      case '<':
      case '>':
      case '+':
      case '-':
      case '*':
      case '/':
      case '%':
      case '(':
      case ')':
      case ',':
      case '.':
      case ';':
        tokens.push_back({TokenKind::symbol, std::string(1, c), start});
        ++i;
        continue;
      default:
        break;
    }
    throw SyntaxException(start, std::string("unexpected character '") + c + "'");
  }
  tokens.push_back({TokenKind::end, "", n});
  return tokens;
}

}  // namespace finstat::guard
