#include "finstat/store/ingest.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <tuple>

#include "finstat/core/text.hpp"

namespace finstat::store {
namespace {

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = text::trim(s);
  std::int64_t value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

enum class MoneyParse { ok, malformed, fractional };

// Whole-VND amounts; "12.000" is accepted, "12.5" is not.
MoneyParse parse_money(std::string_view s, std::int64_t& out) {
  s = text::trim(s);
  const auto dot = s.find('.');
  const auto whole = s.substr(0, dot);
  const auto parsed = parse_int(whole);
  if (!parsed || whole.empty()) return MoneyParse::malformed;
  if (dot != std::string_view::npos) {
    const auto frac = s.substr(dot + 1);
    if (frac.empty()) return MoneyParse::malformed;
    for (char c : frac) {
      if (c < '0' || c > '9') return MoneyParse::malformed;
      if (c != '0') return MoneyParse::fractional;
    }
  }
  out = *parsed;
  return MoneyParse::ok;
}

}  // namespace

IngestReport ingest_statements(Warehouse& warehouse, std::span<const RawStatementRecord> rows,
                               FormatKind format, const AccountMapping& mapping,
                               std::string_view date_added) {
  if (!mapping.covers(format)) {
    throw std::invalid_argument("mapping has no entries for format '" +
                                std::string(to_string(format)) + "'");
  }
  IngestReport report;
  if (rows.empty()) return report;

  auto insert = warehouse.prepare(
      "INSERT INTO financial_statement (stock_code, year, quarter, category_code, data, date_added) "
      "VALUES (?, ?, ?, ?, ?, ?)");
  warehouse.begin();
  try {
    for (const auto& row : rows) {
      const auto year = parse_int(row.year);
      const auto quarter = parse_int(row.quarter);
      const auto stock = text::to_upper(text::trim(row.stock_code));
      if (!year || !quarter || stock.empty()) {
        report.rejected.push_back({row, "malformed"});
        continue;
      }
      if (*quarter < 0 || *quarter > 4) {
        report.rejected.push_back({row, "bad_quarter"});
        continue;
      }
      const auto* entry = mapping.find(format, text::trim(row.raw_code));
      if (entry == nullptr) {
        report.rejected.push_back({row, "unmapped_code"});
        continue;
      }
      std::int64_t amount = 0;
      const auto money = parse_money(row.data, amount);
      if (money != MoneyParse::ok) {
        report.rejected.push_back({row, money == MoneyParse::fractional ? "bad_value" : "malformed"});
        continue;
      }
      const bool ok = insert.run({stock, *year, *quarter, entry->unified_code, amount,
                                  std::string(date_added)});
      if (!ok) {
        report.rejected.push_back({row, "conflict"});
        continue;
      }
      ++report.inserted;
      if (entry->unified_code != text::trim(row.raw_code)) ++report.remapped;
    }
    warehouse.commit();
  } catch (...) {
    warehouse.rollback();
    throw;
  }
  return report;
}

std::vector<std::string> split_dsv_line(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && current.empty()) {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string quote_dsv_field(std::string_view field, char delimiter) {
  if (field.find(delimiter) == std::string_view::npos && field.find('"') == std::string_view::npos &&
      field.find('\n') == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<RawStatementRecord> read_statement_records(std::istream& in, char delimiter) {
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    std::string header_line = line;
    if (header_line.rfind("\xEF\xBB\xBF", 0) == 0) header_line.erase(0, 3);
    const auto names = split_dsv_line(header_line, delimiter);
    for (std::size_t i = 0; i < names.size(); ++i) index[text::to_lower(text::trim(names[i]))] = i;
    break;
  }
  for (const char* required : {"stock_code", "year", "quarter", "raw_code", "data"}) {
    if (index.count(required) == 0) {
      throw std::invalid_argument(std::string("statement file header lacks column '") + required + "'");
    }
  }

  std::vector<RawStatementRecord> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = split_dsv_line(line, delimiter);
    const auto field = [&](const char* name) -> std::string {
      const auto i = index.at(name);
      return i < fields.size() ? std::string(text::trim(fields[i])) : std::string();
    };
    rows.push_back({field("stock_code"), field("year"), field("quarter"), field("raw_code"),
                    field("data"), line_no});
  }
  return rows;
}

void write_statement_records(std::ostream& out, std::span<const RawStatementRecord> rows,
                             char delimiter) {
  out << "stock_code" << delimiter << "year" << delimiter << "quarter" << delimiter << "raw_code"
      << delimiter << "data\n";
  for (const auto& r : rows) {
    out << quote_dsv_field(r.stock_code, delimiter) << delimiter << quote_dsv_field(r.year, delimiter)
        << delimiter << quote_dsv_field(r.quarter, delimiter) << delimiter
        << quote_dsv_field(r.raw_code, delimiter) << delimiter << quote_dsv_field(r.data, delimiter)
        << '\n';
  }
}

}  // namespace finstat::store
