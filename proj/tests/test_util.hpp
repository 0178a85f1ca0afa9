#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "finstat/core/text.hpp"

namespace finstat::testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Path relative to the tests/ directory, e.g. "data/golden_query.sql".
inline std::string read_test_file(const std::string& relative) {
  return read_file(std::string(FINSTAT_TEST_DIR) + "/" + relative);
}

inline std::string golden_query() { return read_test_file("data/golden_query.sql"); }

// "<hex> <name>" lines; '#' lines are comments.
inline std::map<std::string, std::string> golden_hashes() {
  std::map<std::string, std::string> out;
  for (const auto& line : text::split_lines(read_test_file("golden/prompts.sha256"))) {
    if (line.empty() || line[0] == '#') continue;
    const auto space = line.find(' ');
    out[line.substr(space + 1)] = line.substr(0, space);
  }
  return out;
}

}  // namespace finstat::testing
