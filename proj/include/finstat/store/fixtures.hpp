#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finstat/store/ingest.hpp"
#include "finstat/store/mapping.hpp"
#include "finstat/store/warehouse.hpp"

namespace finstat::store {

struct FixtureProfile {
  std::string name;
  std::size_t company_count = 0;
  int first_year = 2021;
  int last_year = 2023;

  static FixtureProfile train();  // 102 companies
  static FixtureProfile test();   // 200 companies
  static std::optional<FixtureProfile> from_name(std::string_view name);
};

struct FixtureCompany {
  std::string stock_code;
  std::string industry;
  std::string exchange;
  std::string stock_indices;
  FormatKind format = FormatKind::corporation;
  bool is_bank() const { return format == FormatKind::bank; }
  bool is_securities() const { return format == FormatKind::securities; }
};

// Companies of a profile in seeding order. Every profile starts with the same
// twenty banks, so the banking rows are identical across profiles.
std::vector<FixtureCompany> fixture_companies(const FixtureProfile& profile);

// Raw statement rows (source raw codes) for one company, all years and quarters.
std::vector<RawStatementRecord> fixture_statement_records(const FixtureCompany& company,
                                                          const FixtureProfile& profile,
                                                          const AccountMapping& mapping);

// Creates the schema and seeds every table. Statements go through
// ingest_statements with the shipped mapping; aggregates are derived in SQL.
// Throws std::runtime_error if any generated row is rejected.
std::shared_ptr<Warehouse> seed_fixture(const FixtureProfile& profile,
                                        const std::string& location = ":memory:");
void seed_fixture_into(Warehouse& warehouse, const FixtureProfile& profile);

// Deterministic dump of all seven tables, each as "## <table>" followed by a
// comma-separated header and rows in primary-key order.
void export_fixture(const Warehouse& warehouse, std::ostream& out);
std::string export_fixture(const Warehouse& warehouse);

}  // namespace finstat::store
