#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace finstat {

// NULL, INTEGER, REAL or TEXT, mirroring the storage classes the warehouse returns.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  // Row order is significant (the producing query had a top-level ORDER BY).
  bool ordered = false;
  // More rows were available than the row cap allowed.
  bool truncated = false;

  bool operator==(const ResultTable&) const = default;
};

enum class ExecErrorKind { syntax, semantic, timeout, empty };

struct ExecError {
  ExecErrorKind kind = ExecErrorKind::semantic;
  std::string message;

  bool operator==(const ExecError&) const = default;
};

using ExecOutcome = std::variant<ResultTable, ExecError>;

std::string_view to_string(ExecErrorKind kind);
ExecErrorKind exec_error_kind_from_string(std::string_view s);

std::string cell_to_string(const Cell& cell);

// Fixed-width text rendering: header row, dashed rule, then up to max_rows rows.
// When rows are elided a trailing "(N more rows)" line is appended.
std::string render_table(const ResultTable& table, std::size_t max_rows);

nlohmann::json to_json(const ResultTable& table);
ResultTable result_table_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExecError& error);
nlohmann::json to_json(const ExecOutcome& outcome);

}  // namespace finstat
