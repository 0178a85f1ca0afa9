#pragma once

// Random SELECT generator and mutation operators shared by the guard tests and
// the acceptance runner. Every generated query is valid against the warehouse
// catalog and carries a quarter predicate; every mutant must be rejected.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace finstat::testing {

class SelectGenerator {
 public:
  explicit SelectGenerator(std::uint64_t seed) : rng_(seed) {}

  std::string next() {
    switch (pick(6)) {
      case 0: return with_cte();
      case 1: return joined();
      case 2: return grouped();
      case 3: return with_subquery();
      case 4: return compound();
      default: return simple();
    }
  }

  std::vector<std::string> batch(std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(next());
    return out;
  }

 private:
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool coin() { return pick(2) == 0; }
  template <class T, std::size_t N>
  const T& one_of(const T (&items)[N]) {
    return items[pick(N)];
  }

  std::string quarter_pred(const std::string& q) {
    static const char* forms[] = {"{q} = 3", "{q} = 0", "{q} IN (1, 2)", "{q} BETWEEN 1 AND 4",
                                  "{q} <> 0", "{q} >= 2"};
    std::string f = one_of(forms);
    f.replace(f.find("{q}"), 3, q);
    return f;
  }

  std::string year_pred(const std::string& y) {
    static const char* forms[] = {"{y} = 2023", "{y} >= 2022", "{y} BETWEEN 2021 AND 2023",
                                  "{y} IN (2022, 2023)", "NOT {y} < 2022"};
    std::string f = one_of(forms);
    f.replace(f.find("{y}"), 3, y);
    return f;
  }

  std::string limit_clause() {
    switch (pick(4)) {
      case 0: return "";
      case 1: return " LIMIT 10";
      case 2: return " LIMIT 5000";
      default: return " LIMIT 100 OFFSET 5";
    }
  }

  std::string ratio_table_where(const std::string& p) {
    static const char* codes[] = {"'ROE'", "'CDGYoY'", "'NIM'", "'EPS'", "'PE'"};
    std::string w = p + "ratio_code = " + one_of(codes) + " AND " + quarter_pred(p + "quarter");
    if (coin()) w += " AND " + year_pred(p + "year");
    if (coin()) w += " AND (" + p + "data > 0.1 OR " + p + "data IS NULL)";
    if (coin()) w += " AND " + p + "stock_code LIKE 'H%'";
    return w;
  }

  std::string simple() {
    static const char* tables[] = {"financial_ratio", "financial_statement", "financial_statement_explaination"};
    const std::string table = one_of(tables);
    const std::string a = coin() ? "t" : "";
    const std::string p = a.empty() ? "" : a + ".";
    std::string sql = "SELECT ";
    if (coin()) sql += "DISTINCT ";
    sql += p + "stock_code, " + p + "year, " + p + "quarter";
    if (coin()) sql += ", " + p + "data * 100 AS pct";
    if (coin()) sql += ", CASE WHEN " + p + "data > 0 THEN 'up' ELSE 'down' END AS direction";
    if (coin()) sql += ", CAST(" + p + "data AS REAL) AS value";
    sql += " FROM " + table + (a.empty() ? "" : " " + a);
    if (table == "financial_ratio") {
      sql += " WHERE " + ratio_table_where(p);
    } else {
      sql += " WHERE " + p + "category_code = 'NET_INCOME' AND " + quarter_pred(p + "quarter");
      if (coin()) sql += " AND " + year_pred(p + "year");
    }
    if (coin()) sql += " ORDER BY " + p + "data " + (coin() ? "DESC" : "ASC") + ", " + p + "stock_code";
    return sql + limit_clause();
  }

  std::string joined() {
    static const char* joins[] = {"JOIN", "INNER JOIN", "LEFT JOIN"};
    std::string sql = "SELECT fr.stock_code, ci.industry, fr.data FROM financial_ratio fr ";
    sql += one_of(joins);
    sql += " company_info ci ON fr.stock_code = ci.stock_code WHERE " + ratio_table_where("fr.");
    if (coin()) sql += " AND ci.is_bank = TRUE";
    if (coin()) sql += " AND ci.industry <> 'Banking'";
    if (coin()) sql += " ORDER BY fr.data DESC";
    return sql + limit_clause();
  }

  std::string grouped() {
    static const char* aggs[] = {"AVG(data)", "MAX(data)", "MIN(data)", "SUM(data)", "COUNT(*)",
                                 "COUNT(DISTINCT stock_code)"};
    std::string sql = "SELECT year, quarter, ";
    sql += one_of(aggs);
    sql += " AS agg FROM financial_statement WHERE category_code = 'NET_REVENUE' AND " + quarter_pred("quarter");
    sql += " GROUP BY year, quarter";
    if (coin()) sql += " HAVING COUNT(*) > 1";
    if (coin()) sql += " ORDER BY agg DESC";
    return sql + limit_clause();
  }

  std::string with_subquery() {
    std::string sql = "SELECT stock_code, data FROM financial_ratio WHERE " + ratio_table_where("");
    if (coin()) {
      sql += " AND stock_code IN (SELECT stock_code FROM company_info WHERE industry = 'Banking')";
    } else {
      sql += " AND data > (SELECT AVG(data) FROM financial_ratio WHERE ratio_code = 'ROE' AND " +
             quarter_pred("quarter") + ")";
    }
    if (coin()) {
      sql += " AND EXISTS (SELECT 1 FROM company_info ci WHERE ci.stock_code = financial_ratio.stock_code)";
    }
    return sql + limit_clause();
  }

  std::string with_cte() {
    std::string sql = "WITH base AS (SELECT stock_code, year, quarter, data AS v FROM financial_ratio WHERE " +
                      ratio_table_where("") + ")";
    if (coin()) {
      sql += ", avg_v AS (SELECT AVG(v) AS m FROM base)";
      sql += " SELECT b.stock_code, b.v, a.m FROM base b CROSS JOIN avg_v a WHERE b.v > a.m";
    } else {
      sql += " SELECT stock_code, v FROM base";
    }
    if (coin()) sql += " ORDER BY 2 DESC";
    return sql + limit_clause();
  }

  std::string compound() {
    std::string sql = "SELECT stock_code FROM financial_ratio WHERE " + ratio_table_where("");
    sql += coin() ? " UNION ALL " : " UNION ";
    sql += "SELECT stock_code FROM financial_statement WHERE category_code = 'CASH_EQ' AND " +
           quarter_pred("quarter");
    return sql + limit_clause();
  }

  std::mt19937_64 rng_;
};

// Mutations of an admitted query that the guard must reject, one per operator.
inline std::vector<std::string> reject_mutations(const std::string& sql) {
  std::vector<std::string> out;
  const auto replace_first = [&](const std::string& from, const std::string& to) {
    const auto at = sql.find(from);
    if (at == std::string::npos) return;
    std::string m = sql;
    m.replace(at, from.size(), to);
    out.push_back(std::move(m));
  };
  out.push_back(sql + "; DROP TABLE financial_ratio");
  out.push_back(sql + "; DELETE FROM company_info");
  out.push_back(sql + ";\nSELECT 1");
  replace_first("SELECT", "DELETE");
  replace_first("FROM financial_", "FROM financial_ghost_");
  replace_first("stock_code", "stock_kode");
  replace_first("quarter", "quarterz");
  out.push_back(sql.substr(0, sql.size() / 2) + " (");
  out.push_back("INSERT INTO company_info SELECT * FROM (" + sql + ")");
  out.push_back("SELECT load_extension('x') FROM (" + sql + ") sub");
  return out;
}

}  // namespace finstat::testing
