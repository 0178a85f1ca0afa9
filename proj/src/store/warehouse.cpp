#include "finstat/store/warehouse.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <unistd.h>

#include <sqlite3.h>

#include "finstat/core/text.hpp"

namespace finstat::store {
namespace {

constexpr std::string_view k_schema_ddl = R"sql(
CREATE TABLE IF NOT EXISTS company_info (
  stock_code TEXT PRIMARY KEY,
  industry TEXT NOT NULL,
  exchange TEXT,
  stock_indices TEXT,
  is_bank INTEGER NOT NULL DEFAULT 0,
  is_securities INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS sub_and_shareholder (
  stock_code TEXT NOT NULL,
  invest_on TEXT NOT NULL,
  PRIMARY KEY (stock_code, invest_on)
);
CREATE TABLE IF NOT EXISTS financial_statement (
  stock_code TEXT NOT NULL,
  year INTEGER NOT NULL,
  quarter INTEGER NOT NULL CHECK (quarter BETWEEN 0 AND 4),
  category_code TEXT NOT NULL,
  data INTEGER,
  date_added TEXT,
  PRIMARY KEY (stock_code, year, quarter, category_code)
);
CREATE TABLE IF NOT EXISTS industry_financial_statement (
  industry TEXT NOT NULL,
  year INTEGER NOT NULL,
  quarter INTEGER NOT NULL CHECK (quarter BETWEEN 0 AND 4),
  category_code TEXT NOT NULL,
  data_mean REAL,
  data_sum INTEGER,
  date_added TEXT,
  PRIMARY KEY (industry, year, quarter, category_code)
);
CREATE TABLE IF NOT EXISTS financial_ratio (
  ratio_code TEXT NOT NULL,
  stock_code TEXT NOT NULL,
  year INTEGER NOT NULL,
  quarter INTEGER NOT NULL CHECK (quarter BETWEEN 0 AND 4),
  data REAL,
  date_added TEXT,
  PRIMARY KEY (ratio_code, stock_code, year, quarter)
);
CREATE TABLE IF NOT EXISTS industry_financial_ratio (
  industry TEXT NOT NULL,
  ratio_code TEXT NOT NULL,
  year INTEGER NOT NULL,
  quarter INTEGER NOT NULL CHECK (quarter BETWEEN 0 AND 4),
  data_mean REAL,
  date_added TEXT,
  PRIMARY KEY (industry, ratio_code, year, quarter)
);
CREATE TABLE IF NOT EXISTS financial_statement_explaination (
  category_code TEXT NOT NULL,
  stock_code TEXT NOT NULL,
  year INTEGER NOT NULL,
  quarter INTEGER NOT NULL CHECK (quarter BETWEEN 0 AND 4),
  data INTEGER,
  date_added TEXT,
  PRIMARY KEY (category_code, stock_code, year, quarter)
);
)sql";

std::atomic<int> g_memory_counter{0};

struct Connection {
  sqlite3* db = nullptr;
  ~Connection() {
    if (db != nullptr) sqlite3_close_v2(db);
  }
};

ExecErrorKind classify(std::string_view message) {
  if (text::icontains(message, "syntax error") || text::icontains(message, "incomplete input") ||
      text::icontains(message, "unrecognized token")) {
    return ExecErrorKind::syntax;
  }
  return ExecErrorKind::semantic;
}

struct Deadline {
  std::chrono::steady_clock::time_point at;
  bool expired = false;
};

int progress_callback(void* arg) {
  auto* deadline = static_cast<Deadline*>(arg);
  if (std::chrono::steady_clock::now() >= deadline->at) {
    deadline->expired = true;
    return 1;
  }
  return 0;
}

Cell read_cell(sqlite3_stmt* stmt, int column) {
  switch (sqlite3_column_type(stmt, column)) {
    case SQLITE_INTEGER: return static_cast<std::int64_t>(sqlite3_column_int64(stmt, column));
    case SQLITE_FLOAT: return sqlite3_column_double(stmt, column);
    case SQLITE_NULL: return std::monostate{};
    default: {
      const auto* bytes = sqlite3_column_text(stmt, column);
      const int n = sqlite3_column_bytes(stmt, column);
      return std::string(reinterpret_cast<const char*>(bytes), static_cast<std::size_t>(n));
    }
  }
}

}  // namespace

std::string warehouse_location_from_env(std::string fallback) {
  if (const char* env = std::getenv(k_warehouse_env); env != nullptr && *env != '\0') {
    return env;
  }
  return fallback;
}

std::shared_ptr<Warehouse> Warehouse::open(const std::string& location) {
  std::string uri;
  if (location == ":memory:") {
    uri = "file:finstat-mem-" + std::to_string(::getpid()) + "-" +
          std::to_string(g_memory_counter.fetch_add(1)) + "?mode=memory&cache=shared";
  } else {
    uri = "file:" + location;
  }
  sqlite3* db = nullptr;
  const int rc = sqlite3_open_v2(uri.c_str(), &db,
                                 SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_URI |
                                     SQLITE_OPEN_FULLMUTEX,
                                 nullptr);
  if (rc != SQLITE_OK) {
    std::string message = db != nullptr ? sqlite3_errmsg(db) : "out of memory";
    sqlite3_close_v2(db);
    throw std::runtime_error("cannot open warehouse '" + location + "': " + message);
  }
  sqlite3_busy_timeout(db, 5000);
  return std::shared_ptr<Warehouse>(new Warehouse(location, std::move(uri), db));
}

Warehouse::Warehouse(std::string location, std::string uri, sqlite3* writer)
    : location_(std::move(location)),
      uri_(std::move(uri)),
      writer_(writer),
      catalog_(SchemaCatalog::financial_warehouse()) {}

Warehouse::~Warehouse() {
  if (writer_ != nullptr) sqlite3_close_v2(writer_);
}

void Warehouse::create_schema() { exec(k_schema_ddl); }

void Warehouse::exec(std::string_view sql) {
  char* err = nullptr;
  const std::string owned(sql);
  if (sqlite3_exec(writer_, owned.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string message = err != nullptr ? err : "unknown error";
    sqlite3_free(err);
    throw std::runtime_error("warehouse write failed: " + message);
  }
}

void Warehouse::begin() { exec("BEGIN IMMEDIATE"); }
void Warehouse::commit() { exec("COMMIT"); }
void Warehouse::rollback() { exec("ROLLBACK"); }

Warehouse::Statement Warehouse::prepare(std::string_view sql) {
  sqlite3_stmt* stmt = nullptr;
  if (sqlite3_prepare_v2(writer_, sql.data(), static_cast<int>(sql.size()), &stmt, nullptr) !=
      SQLITE_OK) {
    throw std::runtime_error("prepare failed: " + std::string(sqlite3_errmsg(writer_)));
  }
  return Statement(writer_, stmt);
}

Warehouse::Statement::Statement(Statement&& other) noexcept
    : db_(other.db_), stmt_(other.stmt_) {
  other.stmt_ = nullptr;
}

Warehouse::Statement::~Statement() {
  if (stmt_ != nullptr) sqlite3_finalize(stmt_);
}

bool Warehouse::Statement::run(const std::vector<Value>& values) {
  sqlite3_reset(stmt_);
  sqlite3_clear_bindings(stmt_);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int idx = static_cast<int>(i + 1);
    const auto& v = values[i];
    if (std::holds_alternative<std::monostate>(v)) {
      sqlite3_bind_null(stmt_, idx);
    } else if (const auto* n = std::get_if<std::int64_t>(&v)) {
      sqlite3_bind_int64(stmt_, idx, *n);
    } else if (const auto* d = std::get_if<double>(&v)) {
      sqlite3_bind_double(stmt_, idx, *d);
    } else {
      const auto& s = std::get<std::string>(v);
      sqlite3_bind_text(stmt_, idx, s.data(), static_cast<int>(s.size()), SQLITE_TRANSIENT);
    }
  }
  const int rc = sqlite3_step(stmt_);
  sqlite3_reset(stmt_);
  if (rc == SQLITE_DONE) return true;
  if ((rc & 0xff) == SQLITE_CONSTRAINT) return false;
  throw std::runtime_error("insert failed: " + std::string(sqlite3_errmsg(db_)));
}

ExecOutcome Warehouse::execute_readonly(std::string_view sql, const ExecLimits& limits) const {
  Connection conn;
  if (sqlite3_open_v2(uri_.c_str(), &conn.db,
                      SQLITE_OPEN_READONLY | SQLITE_OPEN_URI | SQLITE_OPEN_NOMUTEX, nullptr) !=
      SQLITE_OK) {
    return ExecError{ExecErrorKind::semantic,
                     "cannot open warehouse: " + std::string(sqlite3_errmsg(conn.db))};
  }
  sqlite3_busy_timeout(conn.db, static_cast<int>(limits.timeout.count()));
  sqlite3_exec(conn.db, "PRAGMA query_only = 1", nullptr, nullptr, nullptr);

  Deadline deadline{std::chrono::steady_clock::now() + limits.timeout};
  sqlite3_progress_handler(conn.db, 1000, &progress_callback, &deadline);

  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  if (sqlite3_prepare_v2(conn.db, sql.data(), static_cast<int>(sql.size()), &raw, &tail) !=
      SQLITE_OK) {
    if (deadline.expired) return ExecError{ExecErrorKind::timeout, "query exceeded time limit"};
    const std::string message = sqlite3_errmsg(conn.db);
    return ExecError{classify(message), message};
  }
  std::unique_ptr<sqlite3_stmt, int (*)(sqlite3_stmt*)> stmt(raw, &sqlite3_finalize);
  if (!stmt) return ExecError{ExecErrorKind::syntax, "no statement to execute"};
  if (tail != nullptr) {
    const std::string_view rest(tail, static_cast<std::size_t>(sql.data() + sql.size() - tail));
    const auto trimmed = text::trim(rest);
    if (!trimmed.empty() && trimmed.find_first_not_of(';') != std::string_view::npos) {
      return ExecError{ExecErrorKind::syntax, "multiple statements are not allowed"};
    }
  }
  if (sqlite3_stmt_readonly(stmt.get()) == 0) {
    return ExecError{ExecErrorKind::semantic, "statement would modify the warehouse"};
  }

  ResultTable table;
  const int columns = sqlite3_column_count(stmt.get());
  for (int c = 0; c < columns; ++c) table.columns.emplace_back(sqlite3_column_name(stmt.get(), c));

  while (true) {
    const int rc = sqlite3_step(stmt.get());
    if (rc == SQLITE_DONE) break;
    if (rc == SQLITE_ROW) {
      if (table.rows.size() >= limits.row_cap) {
        table.truncated = true;
        break;
      }
      std::vector<Cell> row;
      row.reserve(static_cast<std::size_t>(columns));
      for (int c = 0; c < columns; ++c) row.push_back(read_cell(stmt.get(), c));
      table.rows.push_back(std::move(row));
      continue;
    }
    if (deadline.expired || rc == SQLITE_INTERRUPT) {
      return ExecError{ExecErrorKind::timeout, "query exceeded time limit of " +
                                                   std::to_string(limits.timeout.count()) + " ms"};
    }
    const std::string message = sqlite3_errmsg(conn.db);
    return ExecError{classify(message), message};
  }
  if (table.rows.empty()) return ExecError{ExecErrorKind::empty, "query returned no rows"};
  return table;
}

bool Warehouse::ready() const {
  const auto result = execute_readonly("SELECT COUNT(*) FROM company_info", {1, std::chrono::milliseconds(2000)});
  const auto* table = std::get_if<ResultTable>(&result);
  if (table == nullptr || table->rows.empty()) return false;
  const auto* n = std::get_if<std::int64_t>(&table->rows[0][0]);
  return n != nullptr && *n > 0;
}

std::map<std::string, std::int64_t> Warehouse::row_counts() const {
  std::map<std::string, std::int64_t> counts;
  for (const auto& t : catalog_.tables) {
    const auto result = execute_readonly("SELECT COUNT(*) FROM " + t.name);
    const auto* table = std::get_if<ResultTable>(&result);
    if (table == nullptr) throw std::runtime_error("cannot count rows of " + t.name);
    counts[t.name] = std::get<std::int64_t>(table->rows.at(0).at(0));
  }
  return counts;
}

namespace {

std::vector<std::string> single_text_column(const Warehouse& w, std::string_view sql) {
  std::vector<std::string> out;
  const auto result = w.execute_readonly(sql, {1000000, std::chrono::milliseconds(10000)});
  if (const auto* table = std::get_if<ResultTable>(&result)) {
    for (const auto& row : table->rows) out.push_back(cell_to_string(row.at(0)));
  }
  return out;
}

}  // namespace

std::vector<std::string> Warehouse::company_codes() const {
  return single_text_column(*this, "SELECT stock_code FROM company_info ORDER BY stock_code");
}

std::vector<std::string> Warehouse::industries() const {
  return single_text_column(*this, "SELECT DISTINCT industry FROM company_info ORDER BY industry");
}

}  // namespace finstat::store
