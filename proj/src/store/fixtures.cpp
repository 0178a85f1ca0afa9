#include "finstat/store/fixtures.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "finstat/core/text.hpp"

namespace finstat::store {
namespace {

constexpr std::string_view k_banking = "Banking";

struct NamedCompany {
  const char* code;
  const char* industry;
  const char* exchange;
  const char* indices;
  FormatKind format;
};

// The first four banks and their Q3 2023 credit growth are the golden-query
// rows; the other sixteen sit below the industry mean.
constexpr NamedCompany k_named[] = {
    {"HDB", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"VPB", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"MSB", "Banking", "HOSE", "VNMidcap", FormatKind::bank},
    {"KLB", "Banking", "UPCOM", "", FormatKind::bank},
    {"VCB", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"BID", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"CTG", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"TCB", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"MBB", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"ACB", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"STB", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"TPB", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"SHB", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"EIB", "Banking", "HOSE", "VNMidcap", FormatKind::bank},
    {"OCB", "Banking", "HOSE", "VNMidcap", FormatKind::bank},
    {"LPB", "Banking", "HOSE", "VNMidcap", FormatKind::bank},
    {"SSB", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"VIB", "Banking", "HOSE", "VN30", FormatKind::bank},
    {"NAB", "Banking", "UPCOM", "", FormatKind::bank},
    {"BAB", "Banking", "HNX", "", FormatKind::bank},
    {"SSI", "Securities", "HOSE", "VN30", FormatKind::securities},
    {"VND", "Securities", "HOSE", "VNMidcap", FormatKind::securities},
    {"HCM", "Securities", "HOSE", "VNMidcap", FormatKind::securities},
    {"VCI", "Securities", "HOSE", "VNMidcap", FormatKind::securities},
    {"SHS", "Securities", "HNX", "HNX30", FormatKind::securities},
    {"MBS", "Securities", "HNX", "HNX30", FormatKind::securities},
    {"FTS", "Securities", "HOSE", "VNSmallcap", FormatKind::securities},
    {"BSI", "Securities", "HOSE", "VNSmallcap", FormatKind::securities},
    {"VNM", "Food & Beverage", "HOSE", "VN30", FormatKind::corporation},
    {"MSN", "Food & Beverage", "HOSE", "VN30", FormatKind::corporation},
    {"SAB", "Food & Beverage", "HOSE", "VN30", FormatKind::corporation},
    {"FPT", "Technology", "HOSE", "VN30", FormatKind::corporation},
    {"CMG", "Technology", "HOSE", "VNMidcap", FormatKind::corporation},
    {"HPG", "Steel", "HOSE", "VN30", FormatKind::corporation},
    {"HSG", "Steel", "HOSE", "VNMidcap", FormatKind::corporation},
    {"NKG", "Steel", "HOSE", "VNSmallcap", FormatKind::corporation},
    {"MWG", "Retail", "HOSE", "VN30", FormatKind::corporation},
    {"PNJ", "Retail", "HOSE", "VNMidcap", FormatKind::corporation},
    {"FRT", "Retail", "HOSE", "VNMidcap", FormatKind::corporation},
    {"VIC", "Real Estate", "HOSE", "VN30", FormatKind::corporation},
    {"VHM", "Real Estate", "HOSE", "VN30", FormatKind::corporation},
    {"VRE", "Real Estate", "HOSE", "VN30", FormatKind::corporation},
    {"NVL", "Real Estate", "HOSE", "VNMidcap", FormatKind::corporation},
    {"KDH", "Real Estate", "HOSE", "VNMidcap", FormatKind::corporation},
    {"DXG", "Real Estate", "HOSE", "VNMidcap", FormatKind::corporation},
    {"GAS", "Oil & Gas", "HOSE", "VN30", FormatKind::corporation},
    {"PLX", "Oil & Gas", "HOSE", "VN30", FormatKind::corporation},
    {"PVD", "Oil & Gas", "HOSE", "VNMidcap", FormatKind::corporation},
    {"PVS", "Oil & Gas", "HNX", "HNX30", FormatKind::corporation},
    {"POW", "Utilities", "HOSE", "VN30", FormatKind::corporation},
    {"REE", "Utilities", "HOSE", "VNMidcap", FormatKind::corporation},
    {"GVR", "Chemicals", "HOSE", "VN30", FormatKind::corporation},
    {"DGC", "Chemicals", "HOSE", "VNMidcap", FormatKind::corporation},
    {"DPM", "Chemicals", "HOSE", "VNMidcap", FormatKind::corporation},
    {"CTD", "Construction", "HOSE", "VNSmallcap", FormatKind::corporation},
    {"HBC", "Construction", "HOSE", "VNSmallcap", FormatKind::corporation},
    {"VJC", "Aviation", "HOSE", "VN30", FormatKind::corporation},
    {"HVN", "Aviation", "HOSE", "VNMidcap", FormatKind::corporation},
};

constexpr const char* k_filler_industries[] = {
    "Food & Beverage", "Technology", "Steel",        "Retail",   "Real Estate",
    "Oil & Gas",       "Utilities",  "Construction", "Aviation", "Chemicals",
};

// Hundredths. Golden banks first, then sixteen fillers summing to 2.95 so the
// twenty-bank mean is exactly 0.24.
constexpr int k_cdg_2023q3[] = {64, 52, 35, 34, 23, 22, 22, 21, 21, 20,
                                20, 19, 19, 18, 18, 17, 16, 15, 13, 11};
constexpr int k_golden_year = 2023;
constexpr int k_golden_quarter = 3;

constexpr std::string_view k_flow_codes[] = {
    "NET_REVENUE",       "GROSS_PROFIT", "NET_INTEREST_INCOME", "OPERATING_EXPENSES",
    "PROFIT_BEFORE_TAX", "NET_INCOME",   "BROKERAGE_REVENUE",
};

bool is_flow(std::string_view code) {
  for (auto c : k_flow_codes) {
    if (c == code) return true;
  }
  return false;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Platform-independent uniform draws; std distributions are not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

 private:
  std::mt19937_64 engine_;
};

double round_to(double x, int places) {
  const double scale = std::pow(10.0, places);
  return std::round(x * scale) / scale;
}

std::int64_t whole_millions(double vnd) {
  return static_cast<std::int64_t>(std::llround(vnd / 1e6)) * 1'000'000;
}

std::string synthetic_ticker(std::size_t i) {
  // Z-prefixed so it can never collide with a named ticker.
  std::string t = "Z";
  t += static_cast<char>('A' + (i / 26) % 26);
  t += static_cast<char>('A' + i % 26);
  return t;
}

using Period = std::pair<int, int>;  // (year, quarter 1..4)

// Quarterly amounts per unified code.
using QuarterValues = std::map<std::string, std::int64_t>;

std::map<Period, QuarterValues> simulate_quarters(const FixtureCompany& company,
                                                  const FixtureProfile& profile) {
  Rng rng(fnv1a(company.stock_code) ^ 0x5eedf1a7ULL);
  std::map<Period, QuarterValues> out;
  double assets = 0;
  switch (company.format) {
    case FormatKind::bank: assets = rng.uniform(80e12, 1800e12); break;
    case FormatKind::securities: assets = rng.uniform(5e12, 60e12); break;
    case FormatKind::corporation: assets = rng.uniform(2e12, 400e12); break;
  }
  const double margin = rng.uniform(0.04, 0.16);
  for (int year = profile.first_year; year <= profile.last_year; ++year) {
    for (int q = 1; q <= 4; ++q) {
      assets *= 1.0 + rng.uniform(-0.01, 0.05);
      QuarterValues v;
      switch (company.format) {
        case FormatKind::bank: {
          const double loans = assets * rng.uniform(0.55, 0.70);
          const double liabilities = assets * rng.uniform(0.88, 0.93);
          const double nii = assets * rng.uniform(0.006, 0.010);
          const double opex = nii * rng.uniform(0.30, 0.45);
          const double pbt = (nii - opex) * rng.uniform(0.55, 0.85);
          v["TOTAL_ASSETS"] = whole_millions(assets);
          v["CUSTOMER_LOANS"] = whole_millions(loans);
          v["CASH_EQ"] = whole_millions(assets * rng.uniform(0.005, 0.015));
          v["CUSTOMER_DEPOSITS"] = whole_millions(assets * rng.uniform(0.60, 0.75));
          v["TOTAL_LIABILITIES"] = whole_millions(liabilities);
          v["OWNERS_EQUITY"] = v["TOTAL_ASSETS"] - v["TOTAL_LIABILITIES"];
          v["NET_INTEREST_INCOME"] = whole_millions(nii);
          v["OPERATING_EXPENSES"] = whole_millions(opex);
          v["PROFIT_BEFORE_TAX"] = whole_millions(pbt);
          v["NET_INCOME"] = whole_millions(pbt * 0.8);
          break;
        }
        case FormatKind::securities: {
          const double revenue = assets * rng.uniform(0.02, 0.04);
          const double pbt = revenue * rng.uniform(0.25, 0.45);
          v["TOTAL_ASSETS"] = whole_millions(assets);
          v["CASH_EQ"] = whole_millions(assets * rng.uniform(0.05, 0.15));
          v["FVTPL_ASSETS"] = whole_millions(assets * rng.uniform(0.20, 0.35));
          v["MARGIN_LOANS"] = whole_millions(assets * rng.uniform(0.30, 0.50));
          v["TOTAL_LIABILITIES"] = whole_millions(assets * rng.uniform(0.45, 0.70));
          v["OWNERS_EQUITY"] = v["TOTAL_ASSETS"] - v["TOTAL_LIABILITIES"];
          v["NET_REVENUE"] = whole_millions(revenue);
          v["BROKERAGE_REVENUE"] = whole_millions(revenue * rng.uniform(0.25, 0.45));
          v["PROFIT_BEFORE_TAX"] = whole_millions(pbt);
          v["NET_INCOME"] = whole_millions(pbt * 0.8);
          break;
        }
        case FormatKind::corporation: {
          const double revenue = assets * rng.uniform(0.15, 0.35);
          const double gross = revenue * rng.uniform(0.12, 0.40);
          const double pbt = revenue * margin * rng.uniform(0.7, 1.3);
          v["TOTAL_ASSETS"] = whole_millions(assets);
          v["CASH_EQ"] = whole_millions(assets * rng.uniform(0.04, 0.15));
          v["SHORT_TERM_INVESTMENTS"] = whole_millions(assets * rng.uniform(0.01, 0.10));
          v["INVENTORY"] = whole_millions(assets * rng.uniform(0.05, 0.30));
          v["TOTAL_LIABILITIES"] = whole_millions(assets * rng.uniform(0.30, 0.70));
          v["OWNERS_EQUITY"] = v["TOTAL_ASSETS"] - v["TOTAL_LIABILITIES"];
          v["NET_REVENUE"] = whole_millions(revenue);
          v["GROSS_PROFIT"] = whole_millions(gross);
          v["PROFIT_BEFORE_TAX"] = whole_millions(pbt);
          v["NET_INCOME"] = whole_millions(pbt * 0.8);
          break;
        }
      }
      out[{year, q}] = std::move(v);
    }
  }
  return out;
}

// Quarter 0 carries annual figures: flows summed over Q1..Q4, stocks at Q4.
std::map<std::pair<int, int>, QuarterValues> with_annual(const std::map<Period, QuarterValues>& quarters,
                                                         const FixtureProfile& profile) {
  auto all = quarters;
  for (int year = profile.first_year; year <= profile.last_year; ++year) {
    QuarterValues annual = quarters.at({year, 4});
    for (auto& [code, value] : annual) {
      if (!is_flow(code)) continue;
      value = 0;
      for (int q = 1; q <= 4; ++q) value += quarters.at({year, q}).at(code);
    }
    all[{year, 0}] = std::move(annual);
  }
  return all;
}

std::vector<std::string> ratio_codes_for(FormatKind format) {
  if (format == FormatKind::bank) {
    return {"CDGYoY", "ROE", "ROA", "NIM", "NPL_RATIO", "EPS", "PE", "PB", "NET_INCOME_YOY",
            "NET_INCOME_QOQ"};
  }
  return {"ROE", "ROA", "EPS", "PE", "PB", "GROSS_MARGIN", "CURRENT_RATIO", "DEBT_TO_EQUITY",
          "NET_INCOME_YOY", "NET_INCOME_QOQ", "REVENUE_YOY"};
}

struct Seeded {
  std::vector<std::vector<Warehouse::Value>> ratios;         // ratio_code, stock, year, quarter, data
  std::vector<std::vector<Warehouse::Value>> explanations;   // category, stock, year, quarter, data
};

void derive_company_rows(const FixtureCompany& company, std::size_t bank_index,
                         const FixtureProfile& profile,
                         const std::map<std::pair<int, int>, QuarterValues>& values, Seeded& out) {
  Rng rng(fnv1a(company.stock_code) ^ 0x7a710ULL);
  const double shares = static_cast<double>(values.at({profile.first_year, 1}).at("OWNERS_EQUITY")) / 10000.0;
  const auto get = [&](int y, int q, const char* code) -> std::optional<double> {
    const auto it = values.find({y, q});
    if (it == values.end()) return std::nullopt;
    const auto c = it->second.find(code);
    if (c == it->second.end()) return std::nullopt;
    return static_cast<double>(c->second);
  };
  const auto growth = [](std::optional<double> now, std::optional<double> before) -> std::optional<double> {
    if (!now || !before || *before == 0) return std::nullopt;
    return round_to(*now / *before - 1.0, 4);
  };

  for (int year = profile.first_year; year <= profile.last_year; ++year) {
    for (int q = 0; q <= 4; ++q) {
      const auto ni = *get(year, q, "NET_INCOME");
      const auto equity = *get(year, q, "OWNERS_EQUITY");
      const auto assets = *get(year, q, "TOTAL_ASSETS");
      for (const auto& code : ratio_codes_for(company.format)) {
        std::optional<double> data;
        if (code == "CDGYoY") {
          if (year == k_golden_year && q == k_golden_quarter) {
            data = k_cdg_2023q3[bank_index] / 100.0;
          } else {
            data = std::round(rng.uniform(5.0, 40.0)) / 100.0;
          }
        } else if (code == "ROE") {
          data = round_to(ni / equity, 4);
        } else if (code == "ROA") {
          data = round_to(ni / assets, 4);
        } else if (code == "NIM") {
          data = round_to(*get(year, q, "NET_INTEREST_INCOME") / assets, 4);
        } else if (code == "NPL_RATIO") {
          data = round_to(rng.uniform(0.008, 0.035), 4);
        } else if (code == "EPS") {
          data = round_to(ni / shares, 2);
        } else if (code == "PE") {
          data = round_to(rng.uniform(5.0, 25.0), 2);
        } else if (code == "PB") {
          data = round_to(rng.uniform(0.6, 3.5), 2);
        } else if (code == "GROSS_MARGIN") {
          const auto gp = get(year, q, "GROSS_PROFIT");
          const auto rev = get(year, q, "NET_REVENUE");
          if (gp && rev && *rev != 0) data = round_to(*gp / *rev, 4);
        } else if (code == "CURRENT_RATIO") {
          data = round_to(rng.uniform(0.8, 2.5), 2);
        } else if (code == "DEBT_TO_EQUITY") {
          data = round_to(*get(year, q, "TOTAL_LIABILITIES") / equity, 4);
        } else if (code == "NET_INCOME_YOY") {
          data = growth(ni, get(year - 1, q, "NET_INCOME"));
        } else if (code == "NET_INCOME_QOQ") {
          if (q > 0) {
            data = q == 1 ? growth(ni, get(year - 1, 4, "NET_INCOME"))
                          : growth(ni, get(year, q - 1, "NET_INCOME"));
          }
        } else if (code == "REVENUE_YOY") {
          data = growth(get(year, q, "NET_REVENUE"), get(year - 1, q, "NET_REVENUE"));
        }
        if (!data) continue;
        out.ratios.push_back({code, company.stock_code, std::int64_t{year}, std::int64_t{q}, *data});
      }

      if (company.is_bank()) {
        // Loan book by term plus non-performing loans.
        const auto loans = static_cast<std::int64_t>(*get(year, q, "CUSTOMER_LOANS"));
        const auto st = whole_millions(static_cast<double>(loans) * rng.uniform(0.45, 0.60));
        const auto mt = whole_millions(static_cast<double>(loans) * rng.uniform(0.15, 0.25));
        const auto lt = loans - st - mt;
        const auto bad = whole_millions(static_cast<double>(loans) * rng.uniform(0.008, 0.035));
        const std::pair<const char*, std::int64_t> rows[] = {
            {"LOANS_SHORT_TERM", st}, {"LOANS_MEDIUM_TERM", mt}, {"LOANS_LONG_TERM", lt}, {"BAD_DEBT", bad}};
        for (const auto& [code, amount] : rows) {
          out.explanations.push_back({std::string(code), company.stock_code, std::int64_t{year},
                                      std::int64_t{q}, amount});
        }
      } else if (company.industry == "Real Estate") {
        const auto holdings = whole_millions(assets * rng.uniform(0.2, 0.5));
        out.explanations.push_back({std::string("REAL_ESTATE_HOLDINGS"), company.stock_code,
                                    std::int64_t{year}, std::int64_t{q}, holdings});
      }
    }
  }
}

}  // namespace

FixtureProfile FixtureProfile::train() { return {"train", 102, 2021, 2023}; }
FixtureProfile FixtureProfile::test() { return {"test", 200, 2021, 2023}; }

std::optional<FixtureProfile> FixtureProfile::from_name(std::string_view name) {
  const auto lowered = text::to_lower(text::trim(name));
  if (lowered == "train") return train();
  if (lowered == "test") return test();
  return std::nullopt;
}

std::vector<FixtureCompany> fixture_companies(const FixtureProfile& profile) {
  std::vector<FixtureCompany> out;
  for (const auto& c : k_named) {
    if (out.size() == profile.company_count) return out;
    out.push_back({c.code, c.industry, c.exchange, c.indices, c.format});
  }
  std::size_t i = 0;
  while (out.size() < profile.company_count) {
    const char* industry = k_filler_industries[i % std::size(k_filler_industries)];
    const char* exchange = i % 3 == 0 ? "HNX" : (i % 3 == 1 ? "HOSE" : "UPCOM");
    out.push_back({synthetic_ticker(i), industry, exchange, "", FormatKind::corporation});
    ++i;
  }
  return out;
}

std::vector<RawStatementRecord> fixture_statement_records(const FixtureCompany& company,
                                                          const FixtureProfile& profile,
                                                          const AccountMapping& mapping) {
  const auto values = with_annual(simulate_quarters(company, profile), profile);
  std::vector<RawStatementRecord> rows;
  for (const auto& [period, codes] : values) {
    for (const auto* entry : mapping.entries_for(company.format)) {
      const auto it = codes.find(entry->unified_code);
      if (it == codes.end()) continue;
      rows.push_back({company.stock_code, std::to_string(period.first), std::to_string(period.second),
                      entry->raw_code, std::to_string(it->second), 0});
    }
  }
  return rows;
}

void seed_fixture_into(Warehouse& warehouse, const FixtureProfile& profile) {
  if (profile.company_count == 0 || profile.first_year > profile.last_year) {
    throw std::invalid_argument("fixture profile '" + profile.name + "' is empty");
  }
  warehouse.create_schema();
  const auto mapping = AccountMapping::shipped();
  const auto companies = fixture_companies(profile);
  const std::string date_added(k_default_date_added);

  warehouse.begin();
  {
    auto insert = warehouse.prepare(
        "INSERT INTO company_info (stock_code, industry, exchange, stock_indices, is_bank, is_securities) "
        "VALUES (?, ?, ?, ?, ?, ?)");
    for (const auto& c : companies) {
      insert.run({c.stock_code, c.industry, c.exchange, c.stock_indices,
                  std::int64_t{c.is_bank() ? 1 : 0}, std::int64_t{c.is_securities() ? 1 : 0}});
    }
    auto holding = warehouse.prepare("INSERT INTO sub_and_shareholder (stock_code, invest_on) VALUES (?, ?)");
    const std::pair<const char*, const char*> named_links[] = {
        {"VIC", "VHM"}, {"VIC", "VRE"}, {"MSN", "VNM"}, {"GAS", "PVS"}, {"HDB", "VJC"}, {"SSB", "SHB"}};
    std::map<std::string, bool> present;
    for (const auto& c : companies) present[c.stock_code] = true;
    for (const auto& [owner, held] : named_links) {
      if (present.count(owner) && present.count(held)) holding.run({std::string(owner), std::string(held)});
    }
    for (std::size_t i = 0; i + 7 < companies.size(); ++i) {
      if (companies[i].stock_code.front() == 'Z' && i % 5 == 0) {
        holding.run({companies[i].stock_code, companies[i + 7].stock_code});
      }
    }
  }
  warehouse.commit();

  std::size_t bank_index = 0;
  Seeded seeded;
  for (const auto& c : companies) {
    const auto rows = fixture_statement_records(c, profile, mapping);
    const auto report = ingest_statements(warehouse, rows, c.format, mapping, date_added);
    if (!report.rejected.empty()) {
      throw std::runtime_error("fixture row rejected for " + c.stock_code + ": " +
                               report.rejected.front().reason);
    }
    const auto values = with_annual(simulate_quarters(c, profile), profile);
    derive_company_rows(c, c.is_bank() ? bank_index++ : 0, profile, values, seeded);
  }

  warehouse.begin();
  {
    auto ratio = warehouse.prepare(
        "INSERT INTO financial_ratio (ratio_code, stock_code, year, quarter, data, date_added) "
        "VALUES (?, ?, ?, ?, ?, ?)");
    for (auto row : seeded.ratios) {
      row.push_back(date_added);
      ratio.run(row);
    }
    auto explanation = warehouse.prepare(
        "INSERT INTO financial_statement_explaination (category_code, stock_code, year, quarter, data, "
        "date_added) VALUES (?, ?, ?, ?, ?, ?)");
    for (auto row : seeded.explanations) {
      row.push_back(date_added);
      explanation.run(row);
    }
  }
  warehouse.exec(
      "INSERT INTO industry_financial_statement (industry, year, quarter, category_code, data_mean, "
      "data_sum, date_added) "
      "SELECT ci.industry, fs.year, fs.quarter, fs.category_code, ROUND(AVG(fs.data), 2), SUM(fs.data), "
      "'" + date_added + "' FROM financial_statement fs JOIN company_info ci ON fs.stock_code = ci.stock_code "
      "GROUP BY ci.industry, fs.year, fs.quarter, fs.category_code");
  warehouse.exec(
      "INSERT INTO industry_financial_ratio (industry, ratio_code, year, quarter, data_mean, date_added) "
      "SELECT ci.industry, fr.ratio_code, fr.year, fr.quarter, ROUND(AVG(fr.data), 4), '" + date_added +
      "' FROM financial_ratio fr JOIN company_info ci ON fr.stock_code = ci.stock_code "
      "GROUP BY ci.industry, fr.ratio_code, fr.year, fr.quarter");
  warehouse.commit();
}

std::shared_ptr<Warehouse> seed_fixture(const FixtureProfile& profile, const std::string& location) {
  auto warehouse = Warehouse::open(location);
  seed_fixture_into(*warehouse, profile);
  return warehouse;
}

void export_fixture(const Warehouse& warehouse, std::ostream& out) {
  static const std::map<std::string, std::string> order_by = {
      {"company_info", "stock_code"},
      {"sub_and_shareholder", "stock_code, invest_on"},
      {"financial_statement", "stock_code, year, quarter, category_code"},
      {"industry_financial_statement", "industry, year, quarter, category_code"},
      {"financial_ratio", "ratio_code, stock_code, year, quarter"},
      {"industry_financial_ratio", "industry, ratio_code, year, quarter"},
      {"financial_statement_explaination", "category_code, stock_code, year, quarter"},
  };
  const ExecLimits limits{10'000'000, std::chrono::milliseconds(60'000)};
  for (const auto& table : warehouse.catalog().tables) {
    out << "## " << table.name << '\n';
    std::string columns;
    for (const auto& col : table.columns) {
      if (!columns.empty()) columns += ',';
      columns += col.name;
    }
    out << columns << '\n';
    const auto result = warehouse.execute_readonly(
        "SELECT " + columns + " FROM " + table.name + " ORDER BY " + order_by.at(table.name), limits);
    if (const auto* err = std::get_if<ExecError>(&result)) {
      if (err->kind == ExecErrorKind::empty) continue;
      throw std::runtime_error("export of " + table.name + " failed: " + err->message);
    }
    for (const auto& row : std::get<ResultTable>(result).rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << quote_dsv_field(cell_to_string(row[i]), ',');
      }
      out << '\n';
    }
  }
}

std::string export_fixture(const Warehouse& warehouse) {
  std::ostringstream out;
  export_fixture(warehouse, out);
  return out.str();
}

}  // namespace finstat::store
