#pragma once

#include <string>

#include "finstat/guard/ast.hpp"

namespace finstat::guard {

// Canonical single-line SQL: upper-case keywords, single spaces, minimal
// parentheses, no trailing semicolon. Re-parsing the output yields a tree
// equal to the input.
std::string to_sql(const Query& query);
std::string to_sql(const Expr& expr);
std::string to_sql(const Statement& statement);
std::string to_sql(const Script& script);

std::string quote_identifier_if_needed(const std::string& name);

}  // namespace finstat::guard
