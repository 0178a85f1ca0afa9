#pragma once

#include <string_view>
#include <variant>

#include "finstat/guard/ast.hpp"
#include "finstat/guard/lexer.hpp"

namespace finstat::guard {

using ParseResult = std::variant<Script, SyntaxError>;

// Splits `sql` into statements and parses each. SELECT / WITH-SELECT
// statements become Query trees; statements led by a known non-query keyword
// (INSERT, DROP, PRAGMA, ...) become OtherStatement. Anything else, and empty
// input, is a SyntaxError carrying a byte offset.
ParseResult parse_sql(std::string_view sql);

// Parses input that must be exactly one query. Throws SyntaxException.
Query parse_single_query(std::string_view sql);

}  // namespace finstat::guard
