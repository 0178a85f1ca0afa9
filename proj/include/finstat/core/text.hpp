#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace finstat::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);
bool starts_with_icase(std::string_view s, std::string_view prefix);
std::vector<std::string> split_lines(std::string_view s);

// Lowercase hex SHA-256 of the bytes of `data`.
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::span<const unsigned char> bytes);
std::vector<unsigned char> base64_decode(std::string_view encoded);

// str.format-style rendering: "{{" and "}}" become literal braces and
// "{name}" is replaced by values.at(name). Substituted values are inserted
// verbatim. Unknown or unterminated placeholders throw std::invalid_argument.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string, std::less<>>& values);

}  // namespace finstat::text
