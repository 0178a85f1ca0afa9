#include <gtest/gtest.h>

#include <cstdlib>
#include <set>
#include <sstream>

#include "finstat/store/catalog.hpp"
#include "finstat/store/fixtures.hpp"
#include "finstat/store/ingest.hpp"
#include "finstat/store/mapping.hpp"
#include "finstat/store/warehouse.hpp"
#include "test_util.hpp"

using namespace finstat;
using namespace finstat::store;

namespace {

ResultTable as_table(const ExecOutcome& outcome) {
  if (const auto* err = std::get_if<ExecError>(&outcome)) {
    ADD_FAILURE() << "query failed: " << err->message;
    return {};
  }
  return std::get<ResultTable>(outcome);
}

std::shared_ptr<Warehouse> test_fixture() {
  static const auto warehouse = seed_fixture(FixtureProfile::test());
  return warehouse;
}

std::shared_ptr<Warehouse> empty_warehouse() {
  auto w = Warehouse::open(":memory:");
  w->create_schema();
  return w;
}

}  // namespace

TEST(Catalog, HasExactlyTheSevenWarehouseTables) {
  const auto catalog = SchemaCatalog::financial_warehouse();
  const auto listed = catalog.table_names();
  const std::set<std::string> names(listed.begin(), listed.end());
  const std::set<std::string> expected = {"company_info",
                                          "sub_and_shareholder",
                                          "financial_statement",
                                          "industry_financial_statement",
                                          "financial_ratio",
                                          "industry_financial_ratio",
                                          "financial_statement_explaination"};
  EXPECT_EQ(names, expected);
  EXPECT_EQ(catalog.tables.size(), 7u);
}

TEST(Catalog, LookupsAreCaseInsensitive) {
  const auto catalog = SchemaCatalog::financial_warehouse();
  const auto* t = catalog.find_table("FINANCIAL_RATIO");
  ASSERT_NE(t, nullptr);
  EXPECT_NE(t->find_column("Quarter"), nullptr);
  EXPECT_EQ(t->find_column("data_sun"), nullptr);
  EXPECT_NE(catalog.find_table("industry_financial_statement")->find_column("data_sum"), nullptr);
}

TEST(Mapping, ShippedMappingIsConsistentWithCatalog) {
  const auto mapping = AccountMapping::shipped();
  EXPECT_GE(mapping.entries().size(), 30u);
  EXPECT_TRUE(mapping.codes_missing_from(SchemaCatalog::financial_warehouse()).empty());
  for (auto kind : {FormatKind::bank, FormatKind::corporation, FormatKind::securities}) {
    EXPECT_TRUE(mapping.covers(kind)) << to_string(kind);
  }
  std::set<std::pair<FormatKind, std::string>> seen;
  for (const auto& e : mapping.entries()) {
    EXPECT_TRUE(seen.insert({e.format, e.raw_code}).second) << e.raw_code;
  }
}

TEST(Mapping, DuplicatePairIsRejected) {
  EXPECT_THROW(AccountMapping({{FormatKind::bank, "B.II.1", "CASH_EQ", "Cash"},
                               {FormatKind::bank, "B.II.1", "TOTAL_ASSETS", "Assets"}}),
               std::invalid_argument);
  EXPECT_NO_THROW(AccountMapping({{FormatKind::bank, "B.II.1", "CASH_EQ", "Cash"},
                                  {FormatKind::corporation, "B.II.1", "CASH_EQ", "Cash"}}));
}

TEST(Mapping, ParsesTsvWithHeader) {
  const auto m = AccountMapping::parse_tsv(
      "format_kind\traw_code\tunified_code\tlabel\nbank\tB.II.1\tCASH_EQ\tCash\n");
  ASSERT_EQ(m.entries().size(), 1u);
  const auto* e = m.find(FormatKind::bank, "B.II.1");
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->unified_code, "CASH_EQ");
  EXPECT_EQ(m.find(FormatKind::securities, "B.II.1"), nullptr);
}

TEST(Ingest, SingleBankRowIsRemappedAndStored) {
  auto w = empty_warehouse();
  const AccountMapping mapping({{FormatKind::bank, "B.II.1", "CASH_EQ", "Cash"}});
  const RawStatementRecord row{"hdb", "2023", "3", "B.II.1", "1500000", 2};
  const auto report = ingest_statements(*w, std::span(&row, 1), FormatKind::bank, mapping);
  EXPECT_EQ(report.inserted, 1u);
  EXPECT_EQ(report.remapped, 1u);
  EXPECT_TRUE(report.rejected.empty());

  const auto t = as_table(w->execute_readonly(
      "SELECT stock_code, year, quarter, category_code, data FROM financial_statement"));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], Cell(std::string("HDB")));
  EXPECT_EQ(t.rows[0][1], Cell(std::int64_t{2023}));
  EXPECT_EQ(t.rows[0][2], Cell(std::int64_t{3}));
  EXPECT_EQ(t.rows[0][3], Cell(std::string("CASH_EQ")));
  EXPECT_EQ(t.rows[0][4], Cell(std::int64_t{1500000}));
}

TEST(Ingest, EmptyStreamYieldsEmptyReport) {
  auto w = empty_warehouse();
  const auto report = ingest_statements(*w, {}, FormatKind::bank, AccountMapping::shipped());
  EXPECT_EQ(report.inserted, 0u);
  EXPECT_EQ(report.remapped, 0u);
  EXPECT_TRUE(report.rejected.empty());
}

TEST(Ingest, EveryBadRowIsReportedWithItsReason) {
  auto w = empty_warehouse();
  const std::vector<RawStatementRecord> rows = {
      {"HDB", "2023", "7", "B.II.1", "10", 1},     // bad_quarter
      {"HDB", "2023", "3", "Z.9", "10", 2},        // unmapped_code
      {"HDB", "2023", "3", "B.II.1", "10", 3},     // ok
      {"HDB", "2023", "3", "B.II.1", "11", 4},     // conflict
      {"HDB", "20x3", "3", "B.II", "10", 5},       // malformed
      {"HDB", "2023", "3", "B.II", "10.5", 6},     // bad_value
      {"HDB", "2023", "2", "B.II", "12.000", 7},   // ok, whole amount
  };
  const auto report = ingest_statements(*w, rows, FormatKind::bank, AccountMapping::shipped());
  EXPECT_EQ(report.inserted, 2u);
  ASSERT_EQ(report.rejected.size(), 5u);
  EXPECT_EQ(report.rejected[0].reason, "bad_quarter");
  EXPECT_EQ(report.rejected[1].reason, "unmapped_code");
  EXPECT_EQ(report.rejected[2].reason, "conflict");
  EXPECT_EQ(report.rejected[3].reason, "malformed");
  EXPECT_EQ(report.rejected[4].reason, "bad_value");
  EXPECT_EQ(report.rejected[2].row.line, 4u);
  EXPECT_EQ(report.inserted + report.rejected.size(), rows.size());
}

TEST(Ingest, MappingMustCoverFormat) {
  auto w = empty_warehouse();
  const AccountMapping mapping({{FormatKind::bank, "B.II.1", "CASH_EQ", "Cash"}});
  const RawStatementRecord row{"VNM", "2023", "3", "110", "1", 0};
  EXPECT_THROW(ingest_statements(*w, std::span(&row, 1), FormatKind::corporation, mapping),
               std::invalid_argument);
}

TEST(Dsv, ReadsHeaderInAnyOrderAndQuotedFields) {
  std::istringstream in(
      "data;raw_code;stock_code;quarter;year\n"
      "\"1;000\";B.II.1;HDB;3;2023\n"
      "\n"
      "5;\"B.\"\"X\";VPB;0;2022\n");
  const auto rows = read_statement_records(in, ';');
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].data, "1;000");
  EXPECT_EQ(rows[0].stock_code, "HDB");
  EXPECT_EQ(rows[0].line, 2u);
  EXPECT_EQ(rows[1].raw_code, "B.\"X");
  EXPECT_EQ(rows[1].line, 4u);
}

TEST(Dsv, WriteThenReadRoundTrips) {
  const std::vector<RawStatementRecord> rows = {{"HDB", "2023", "3", "B.II.1", "100", 2},
                                                {"V,X", "2022", "0", "a\"b", "-5", 3}};
  std::stringstream buf;
  write_statement_records(buf, rows);
  EXPECT_EQ(read_statement_records(buf), rows);
}

TEST(Dsv, MissingHeaderColumnThrows) {
  std::istringstream in("stock_code,year,quarter,data\nHDB,2023,3,1\n");
  EXPECT_THROW(read_statement_records(in), std::invalid_argument);
}

TEST(Execute, EmptyResultIsAnError) {
  const auto outcome = empty_warehouse()->execute_readonly("SELECT 1 WHERE 1=0");
  ASSERT_TRUE(std::holds_alternative<ExecError>(outcome));
  EXPECT_EQ(std::get<ExecError>(outcome).kind, ExecErrorKind::empty);
}

TEST(Execute, SyntaxAndSemanticErrorsAreClassified) {
  auto w = empty_warehouse();
  const auto syntax = w->execute_readonly("SELEC 1");
  ASSERT_TRUE(std::holds_alternative<ExecError>(syntax));
  EXPECT_EQ(std::get<ExecError>(syntax).kind, ExecErrorKind::syntax);

  const auto semantic = w->execute_readonly("SELECT nope FROM company_info");
  ASSERT_TRUE(std::holds_alternative<ExecError>(semantic));
  EXPECT_EQ(std::get<ExecError>(semantic).kind, ExecErrorKind::semantic);

  const auto table = w->execute_readonly("SELECT * FROM no_such_table");
  ASSERT_TRUE(std::holds_alternative<ExecError>(table));
  EXPECT_EQ(std::get<ExecError>(table).kind, ExecErrorKind::semantic);
}

TEST(Execute, RowCapTruncates) {
  const auto t = as_table(test_fixture()->execute_readonly(
      "SELECT stock_code FROM company_info ORDER BY stock_code", {7, std::chrono::milliseconds(2000)}));
  EXPECT_EQ(t.rows.size(), 7u);
  EXPECT_TRUE(t.truncated);
  EXPECT_EQ(t.columns, std::vector<std::string>{"stock_code"});
}

TEST(Execute, TimeoutIsReported) {
  const auto outcome = empty_warehouse()->execute_readonly(
      "WITH RECURSIVE n(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM n) SELECT COUNT(*) FROM n",
      {10, std::chrono::milliseconds(50)});
  ASSERT_TRUE(std::holds_alternative<ExecError>(outcome));
  EXPECT_EQ(std::get<ExecError>(outcome).kind, ExecErrorKind::timeout);
}

TEST(Execute, WritesAndMultipleStatementsNeverChangeData) {
  auto w = test_fixture();
  const auto before = w->row_counts();
  for (const char* sql : {"DELETE FROM company_info", "DROP TABLE financial_ratio",
                          "INSERT INTO company_info (stock_code, industry) VALUES ('X', 'Y')",
                          "SELECT 1; DELETE FROM company_info", "UPDATE financial_ratio SET data = 0",
                          "PRAGMA writable_schema = 1", "ATTACH DATABASE ':memory:' AS other"}) {
    const auto outcome = w->execute_readonly(sql);
    EXPECT_TRUE(std::holds_alternative<ExecError>(outcome)) << sql;
  }
  EXPECT_EQ(w->row_counts(), before);
}

TEST(Execute, ColumnNamesFollowSelectOrder) {
  const auto t = as_table(test_fixture()->execute_readonly(
      "SELECT year AS y, stock_code, quarter FROM financial_ratio WHERE quarter = 3 LIMIT 1"));
  EXPECT_EQ(t.columns, (std::vector<std::string>{"y", "stock_code", "quarter"}));
}

TEST(Fixture, GoldenQueryReturnsTheReferenceTable) {
  const auto t = as_table(test_fixture()->execute_readonly(finstat::testing::golden_query()));
  ASSERT_GE(t.rows.size(), 4u);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"stock_code", "year", "quarter", "credit_growth_yoy",
                                                 "industry_credit_growth"}));
  const std::vector<std::pair<std::string, double>> expected = {
      {"HDB", 0.64}, {"VPB", 0.52}, {"MSB", 0.35}, {"KLB", 0.34}};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(t.rows[i][0], Cell(expected[i].first));
    EXPECT_EQ(t.rows[i][1], Cell(std::int64_t{2023}));
    EXPECT_EQ(t.rows[i][2], Cell(std::int64_t{3}));
    EXPECT_EQ(t.rows[i][3], Cell(expected[i].second));
    EXPECT_EQ(t.rows[i][4], Cell(0.24));
  }
}

TEST(Fixture, FillerBanksSitBelowTheIndustryMean) {
  const auto t = as_table(test_fixture()->execute_readonly(
      "SELECT fr.stock_code, fr.data FROM financial_ratio fr JOIN company_info ci "
      "ON fr.stock_code = ci.stock_code WHERE ci.is_bank = TRUE AND fr.ratio_code = 'CDGYoY' "
      "AND fr.year = 2023 AND fr.quarter = 3"));
  ASSERT_EQ(t.rows.size(), 20u);
  double sum = 0;
  int above = 0;
  for (const auto& row : t.rows) {
    const double v = std::get<double>(row[1]);
    sum += v;
    if (v > 0.24) ++above;
  }
  EXPECT_EQ(above, 4);
  EXPECT_NEAR(sum / 20.0, 0.24, 1e-12);
}

TEST(Fixture, TrainHasFewerCompaniesThanTest) {
  const auto train = seed_fixture(FixtureProfile::train());
  const auto train_count = train->row_counts().at("company_info");
  const auto test_count = test_fixture()->row_counts().at("company_info");
  EXPECT_EQ(train_count, 102);
  EXPECT_EQ(test_count, 200);
  EXPECT_LT(train_count, test_count);
}

TEST(Fixture, SeedingIsDeterministic) {
  const auto a = export_fixture(*seed_fixture(FixtureProfile::train()));
  const auto b = export_fixture(*seed_fixture(FixtureProfile::train()));
  EXPECT_GT(a.size(), 10000u);
  EXPECT_EQ(a, b);
  for (const auto& t : SchemaCatalog::financial_warehouse().tables) {
    EXPECT_NE(a.find("## " + t.name + "\n"), std::string::npos) << t.name;
  }
}

TEST(Fixture, StoredCodesAreUnifiedAndQuartersInDomain) {
  auto w = test_fixture();
  const auto catalog = SchemaCatalog::financial_warehouse();
  const auto codes = as_table(w->execute_readonly(
      "SELECT DISTINCT category_code FROM financial_statement", {100000, std::chrono::seconds(5)}));
  for (const auto& row : codes.rows) {
    EXPECT_EQ(catalog.category_codes.count(std::get<std::string>(row[0])), 1u);
  }
  for (const auto& table : catalog.tables) {
    if (table.find_column("quarter") == nullptr) continue;
    const auto outcome =
        w->execute_readonly("SELECT COUNT(*) FROM " + table.name + " WHERE quarter NOT IN (0, 1, 2, 3, 4)");
    EXPECT_EQ(as_table(outcome).rows.at(0).at(0), Cell(std::int64_t{0})) << table.name;
  }
  const auto ratios = as_table(w->execute_readonly("SELECT DISTINCT ratio_code FROM financial_ratio"));
  for (const auto& row : ratios.rows) {
    EXPECT_EQ(catalog.ratio_codes.count(std::get<std::string>(row[0])), 1u);
  }
}

TEST(Fixture, AnnualFlowsAreSumsOfQuarters) {
  const auto t = as_table(test_fixture()->execute_readonly(
      "SELECT a.data, (SELECT SUM(q.data) FROM financial_statement q WHERE q.stock_code = a.stock_code "
      "AND q.year = a.year AND q.category_code = a.category_code AND q.quarter BETWEEN 1 AND 4) "
      "FROM financial_statement a WHERE a.stock_code = 'FPT' AND a.year = 2022 AND a.quarter = 0 "
      "AND a.category_code = 'NET_REVENUE'"));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], t.rows[0][1]);
}

TEST(Warehouse, LocationComesFromEnvironment) {
  ::unsetenv(k_warehouse_env);
  EXPECT_EQ(warehouse_location_from_env("fallback.db"), "fallback.db");
  ::setenv(k_warehouse_env, "/tmp/x.db", 1);
  EXPECT_EQ(warehouse_location_from_env("fallback.db"), "/tmp/x.db");
  ::unsetenv(k_warehouse_env);
}

TEST(Warehouse, FileBackedFixtureReopens) {
  const std::string path = ::testing::TempDir() + "finstat_store_test.db";
  std::remove(path.c_str());
  {
    auto w = seed_fixture(FixtureProfile::train(), path);
    EXPECT_TRUE(w->ready());
  }
  auto reopened = Warehouse::open(path);
  EXPECT_TRUE(reopened->ready());
  EXPECT_EQ(reopened->company_codes().size(), 102u);
  std::remove(path.c_str());
}
