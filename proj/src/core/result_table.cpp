#include "finstat/core/result_table.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace finstat {

std::string_view to_string(ExecErrorKind kind) {
  switch (kind) {
    case ExecErrorKind::syntax: return "syntax";
    case ExecErrorKind::semantic: return "semantic";
    case ExecErrorKind::timeout: return "timeout";
    case ExecErrorKind::empty: return "empty";
  }
  return "semantic";
}

ExecErrorKind exec_error_kind_from_string(std::string_view s) {
  if (s == "syntax") return ExecErrorKind::syntax;
  if (s == "semantic") return ExecErrorKind::semantic;
  if (s == "timeout") return ExecErrorKind::timeout;
  if (s == "empty") return ExecErrorKind::empty;
  throw std::invalid_argument("unknown exec error kind: " + std::string(s));
}

std::string cell_to_string(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::monostate) const { return "NULL"; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const {
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      return std::string(buf, res.ptr);
    }
    std::string operator()(const std::string& v) const { return v; }
  };
  return std::visit(Visitor{}, cell);
}

std::string render_table(const ResultTable& table, std::size_t max_rows) {
  const std::size_t shown = std::min(max_rows, table.rows.size());
  std::vector<std::size_t> widths(table.columns.size(), 0);
  std::vector<std::vector<std::string>> cells(shown);
  for (std::size_t c = 0; c < table.columns.size(); ++c) widths[c] = table.columns[c].size();
  for (std::size_t r = 0; r < shown; ++r) {
    for (std::size_t c = 0; c < table.columns.size() && c < table.rows[r].size(); ++c) {
      cells[r].push_back(cell_to_string(table.rows[r][c]));
      widths[c] = std::max(widths[c], cells[r].back().size());
    }
  }

  std::string out;
  const auto emit_row = [&](const std::vector<std::string>& values) {
    std::string line;
    for (std::size_t c = 0; c < widths.size(); ++c) {
      if (c > 0) line += " | ";
      const std::string& v = c < values.size() ? values[c] : std::string();
      line += v;
      if (c + 1 < widths.size()) line.append(widths[c] - v.size(), ' ');
    }
    out += line;
    out += '\n';
  };

  emit_row(table.columns);
  std::string rule;
  for (std::size_t c = 0; c < widths.size(); ++c) {
    if (c > 0) rule += "-+-";
    rule.append(widths[c], '-');
  }
  out += rule;
  out += '\n';
  for (const auto& row : cells) emit_row(row);

  const std::size_t hidden = table.rows.size() - shown;
  if (hidden > 0) {
    out += "(" + std::to_string(hidden) + " more rows)\n";
  } else if (table.truncated) {
    out += "(row cap reached)\n";
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

namespace {

nlohmann::json cell_to_json(const Cell& cell) {
  struct Visitor {
    nlohmann::json operator()(std::monostate) const { return nullptr; }
    nlohmann::json operator()(std::int64_t v) const { return v; }
    nlohmann::json operator()(double v) const { return v; }
    nlohmann::json operator()(const std::string& v) const { return v; }
  };
  return std::visit(Visitor{}, cell);
}

Cell cell_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_boolean()) return static_cast<std::int64_t>(j.get<bool>() ? 1 : 0);
  if (j.is_string()) return j.get<std::string>();
  throw std::invalid_argument("unsupported cell value: " + j.dump());
}

}  // namespace

nlohmann::json to_json(const ResultTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& cell : row) r.push_back(cell_to_json(cell));
    rows.push_back(std::move(r));
  }
  return {{"columns", table.columns},
          {"rows", std::move(rows)},
          {"ordered", table.ordered},
          {"truncated", table.truncated}};
}

ResultTable result_table_from_json(const nlohmann::json& j) {
  ResultTable table;
  table.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    std::vector<Cell> row;
    for (const auto& c : r) row.push_back(cell_from_json(c));
    table.rows.push_back(std::move(row));
  }
  table.ordered = j.value("ordered", false);
  table.truncated = j.value("truncated", false);
  return table;
}

nlohmann::json to_json(const ExecError& error) {
  return {{"kind", to_string(error.kind)}, {"message", error.message}};
}

nlohmann::json to_json(const ExecOutcome& outcome) {
  if (const auto* table = std::get_if<ResultTable>(&outcome)) {
    return {{"table", to_json(*table)}};
  }
  return {{"error", to_json(std::get<ExecError>(outcome))}};
}

}  // namespace finstat
