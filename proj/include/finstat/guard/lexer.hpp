#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace finstat::guard {

enum class TokenKind { identifier, quoted_identifier, keyword, string, integer, real, symbol, end };

struct Token {
  TokenKind kind = TokenKind::end;
  // keyword: upper-cased; identifier: lower-cased; quoted_identifier: unquoted
  // spelling; string: unescaped value; symbol: normalized ("!=" becomes "<>").
  std::string text;
  std::size_t offset = 0;
};

struct SyntaxError {
  std::size_t offset = 0;
  std::string message;
};

class SyntaxException : public std::runtime_error {
 public:
  SyntaxException(std::size_t offset, const std::string& message)
      : std::runtime_error(message), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

bool is_reserved_keyword(std::string_view upper);

// Leading keywords of statements the grammar does not model.
bool is_foreign_statement_head(std::string_view upper);

// Throws SyntaxException on unterminated literals/comments and unsupported characters.
// The returned sequence always ends with a TokenKind::end token.
std::vector<Token> tokenize(std::string_view sql);

}  // namespace finstat::guard
