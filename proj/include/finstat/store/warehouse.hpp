#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "finstat/core/result_table.hpp"
#include "finstat/store/catalog.hpp"

struct sqlite3;
struct sqlite3_stmt;

namespace finstat::store {

struct ExecLimits {
  std::size_t row_cap = 1000;
  std::chrono::milliseconds timeout{5000};
};

// Environment variable naming the warehouse location (file path or ":memory:").
inline constexpr const char* k_warehouse_env = "FINSTAT_DB";

std::string warehouse_location_from_env(std::string fallback);

// Star-schema financial warehouse on an embedded SQLite database.
//
// Seeding and ingestion go through the single writer connection and must
// finish before the handle is shared. After that every public read is safe
// from any thread: execute_readonly() opens its own read-only connection.
class Warehouse {
 public:
  using Value = std::variant<std::monostate, std::int64_t, double, std::string>;

  // ":memory:" gives a private in-memory database; anything else is a file path.
  static std::shared_ptr<Warehouse> open(const std::string& location);

  Warehouse(const Warehouse&) = delete;
  Warehouse& operator=(const Warehouse&) = delete;
  ~Warehouse();

  const std::string& location() const { return location_; }
  const SchemaCatalog& catalog() const { return catalog_; }

  // Runs one SELECT on a read-only connection. An empty result is reported as
  // ExecError{empty}. Callers outside tests must pass the SQL through the guard first.
  ExecOutcome execute_readonly(std::string_view sql, const ExecLimits& limits = {}) const;

  // Schema present and at least one company loaded.
  bool ready() const;
  std::map<std::string, std::int64_t> row_counts() const;
  std::vector<std::string> company_codes() const;
  std::vector<std::string> industries() const;

  // ---- single-writer API ----
  void create_schema();
  void exec(std::string_view sql);
  void begin();
  void commit();
  void rollback();

  // Prepared statement on the writer connection.
  class Statement {
   public:
    Statement(Statement&& other) noexcept;
    Statement& operator=(Statement&&) = delete;
    Statement(const Statement&) = delete;
    ~Statement();

    // Binds values positionally and steps once. Returns false on a constraint
    // violation (e.g. duplicate primary key); throws on other errors.
    bool run(const std::vector<Value>& values);

   private:
    friend class Warehouse;
    Statement(sqlite3* db, sqlite3_stmt* stmt) : db_(db), stmt_(stmt) {}
    sqlite3* db_;
    sqlite3_stmt* stmt_;
  };

  Statement prepare(std::string_view sql);

 private:
  Warehouse(std::string location, std::string uri, sqlite3* writer);

  std::string location_;
  std::string uri_;
  sqlite3* writer_ = nullptr;
  SchemaCatalog catalog_;
};

}  // namespace finstat::store
