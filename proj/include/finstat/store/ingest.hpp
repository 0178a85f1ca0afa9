#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finstat/store/mapping.hpp"
#include "finstat/store/warehouse.hpp"

namespace finstat::store {

// One statement row as it appears in a source file, before validation.
struct RawStatementRecord {
  std::string stock_code;
  std::string year;
  std::string quarter;
  std::string raw_code;
  std::string data;
  std::size_t line = 0;  // 1-based source line, 0 when not from a file

  bool operator==(const RawStatementRecord&) const = default;
};

struct RejectedRow {
  RawStatementRecord row;
  // "unmapped_code", "conflict", "bad_quarter", "malformed", "bad_value"
  std::string reason;
};

struct IngestReport {
  std::size_t inserted = 0;
  std::size_t remapped = 0;
  std::vector<RejectedRow> rejected;
};

inline constexpr std::string_view k_default_date_added = "2024-01-15";

// Inserts statement rows under their unified category codes. Every row is
// either inserted or listed in the report's rejections; nothing is dropped.
// Throws std::invalid_argument when the mapping has no entries for `format`.
IngestReport ingest_statements(Warehouse& warehouse, std::span<const RawStatementRecord> rows,
                               FormatKind format, const AccountMapping& mapping,
                               std::string_view date_added = k_default_date_added);

// Delimiter-separated statement rows. The header row is required and must name
// stock_code, year, quarter, raw_code and data (any order; extra columns are ignored).
// Fields may be double-quoted. Throws std::invalid_argument on a bad header.
std::vector<RawStatementRecord> read_statement_records(std::istream& in, char delimiter = ',');
void write_statement_records(std::ostream& out, std::span<const RawStatementRecord> rows,
                             char delimiter = ',');

// Splits one delimiter-separated line, honouring double quotes.
std::vector<std::string> split_dsv_line(std::string_view line, char delimiter);
std::string quote_dsv_field(std::string_view field, char delimiter);

}  // namespace finstat::store
