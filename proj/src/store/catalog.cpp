#include "finstat/store/catalog.hpp"

#include "finstat/core/text.hpp"

namespace finstat::store {

std::string_view to_string(SemanticType type) {
  switch (type) {
    case SemanticType::text: return "text";
    case SemanticType::integer: return "integer";
    case SemanticType::money: return "money";
    case SemanticType::ratio: return "ratio";
    case SemanticType::boolean: return "boolean";
    case SemanticType::date: return "date";
  }
  return "text";
}

const ColumnDef* TableDef::find_column(std::string_view column) const {
  for (const auto& c : columns) {
    if (text::iequals(c.name, column)) return &c;
  }
  return nullptr;
}

const TableDef* SchemaCatalog::find_table(std::string_view table) const {
  for (const auto& t : tables) {
    if (text::iequals(t.name, table)) return &t;
  }
  return nullptr;
}

std::vector<std::string> SchemaCatalog::table_names() const {
  std::vector<std::string> names;
  names.reserve(tables.size());
  for (const auto& t : tables) names.push_back(t.name);
  return names;
}

SchemaCatalog SchemaCatalog::financial_warehouse() {
  using T = SemanticType;
  SchemaCatalog c;
  c.tables = {
      {"company_info",
       {{"stock_code", T::text},
        {"industry", T::text},
        {"exchange", T::text},
        {"stock_indices", T::text},
        {"is_bank", T::boolean},
        {"is_securities", T::boolean}}},
      {"sub_and_shareholder", {{"stock_code", T::text}, {"invest_on", T::text}}},
      {"financial_statement",
       {{"stock_code", T::text},
        {"year", T::integer},
        {"quarter", T::integer},
        {"category_code", T::text},
        {"data", T::money},
        {"date_added", T::date}}},
      {"industry_financial_statement",
       {{"industry", T::text},
        {"year", T::integer},
        {"quarter", T::integer},
        {"category_code", T::text},
        {"data_mean", T::money},
        {"data_sum", T::money},
        {"date_added", T::date}}},
      {"financial_ratio",
       {{"ratio_code", T::text},
        {"stock_code", T::text},
        {"year", T::integer},
        {"quarter", T::integer},
        {"data", T::ratio},
        {"date_added", T::date}}},
      {"industry_financial_ratio",
       {{"industry", T::text},
        {"ratio_code", T::text},
        {"year", T::integer},
        {"quarter", T::integer},
        {"data_mean", T::ratio},
        {"date_added", T::date}}},
      {"financial_statement_explaination",
       {{"category_code", T::text},
        {"stock_code", T::text},
        {"year", T::integer},
        {"quarter", T::integer},
        {"data", T::money},
        {"date_added", T::date}}},
  };

  c.category_codes = {
      {"CASH_EQ", "Cash and cash equivalents"},
      {"SHORT_TERM_INVESTMENTS", "Short-term financial investments"},
      {"INVENTORY", "Inventories"},
      {"TOTAL_ASSETS", "Total assets"},
      {"TOTAL_LIABILITIES", "Total liabilities"},
      {"OWNERS_EQUITY", "Owners' equity"},
      {"CUSTOMER_LOANS", "Loans to customers"},
      {"CUSTOMER_DEPOSITS", "Deposits from customers"},
      {"NET_REVENUE", "Net revenue from sales and services"},
      {"GROSS_PROFIT", "Gross profit"},
      {"NET_INTEREST_INCOME", "Net interest income"},
      {"OPERATING_EXPENSES", "Operating expenses"},
      {"PROFIT_BEFORE_TAX", "Accounting profit before tax"},
      {"NET_INCOME", "Profit After Tax (VAS) / Net Income (IFRS)"},
      {"FVTPL_ASSETS", "Financial assets at fair value through profit or loss"},
      {"MARGIN_LOANS", "Margin lending to investors"},
      {"BROKERAGE_REVENUE", "Brokerage fee revenue"},
      {"LOANS_SHORT_TERM", "Short-term loans to customers"},
      {"LOANS_MEDIUM_TERM", "Medium-term loans to customers"},
      {"LOANS_LONG_TERM", "Long-term loans to customers"},
      {"BAD_DEBT", "Non-performing loans (groups 3-5)"},
      {"REAL_ESTATE_HOLDINGS", "Investment property and real-estate ownership"},
  };

  c.ratio_codes = {
      {"CDGYoY", "Credit growth YoY (loans to customers, year over year)"},
      {"ROE", "Return on equity (ROE)"},
      {"ROA", "Return on assets (ROA)"},
      {"NIM", "Net interest margin (NIM)"},
      {"NPL_RATIO", "Non-performing loan ratio"},
      {"EPS", "Earnings per share (EPS)"},
      {"PE", "Price to earnings (P/E)"},
      {"PB", "Price to book (P/B)"},
      {"GROSS_MARGIN", "Gross profit margin"},
      {"CURRENT_RATIO", "Current ratio"},
      {"DEBT_TO_EQUITY", "Debt to equity"},
      {"NET_INCOME_YOY", "Net Income YoY (profit after tax growth, year over year)"},
      {"NET_INCOME_QOQ", "Net Income QoQ (profit after tax growth, quarter over quarter)"},
      {"REVENUE_YOY", "Net revenue growth YoY"},
  };
  return c;
}

nlohmann::json to_json(const SchemaCatalog& catalog) {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : catalog.tables) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& col : t.columns) {
      cols.push_back({{"name", col.name}, {"type", to_string(col.type)}});
    }
    tables.push_back({{"name", t.name}, {"columns", std::move(cols)}});
  }
  return {{"tables", std::move(tables)},
          {"category_codes", catalog.category_codes},
          {"ratio_codes", catalog.ratio_codes}};
}

}  // namespace finstat::store
