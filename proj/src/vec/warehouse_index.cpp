#include "finstat/vec/warehouse_index.hpp"

#include <spdlog/spdlog.h>

namespace finstat::vec {

void index_warehouse(VectorIndex& index, const store::Warehouse& warehouse, const store::AccountMapping& mapping) {
  for (auto ns : {Namespace::industry, Namespace::company, Namespace::account, Namespace::ratio}) index.clear(ns);

  for (const auto& industry : warehouse.industries()) {
    index.upsert_text(Namespace::industry, industry, industry, {{"code", industry}});
  }

  const auto companies = warehouse.execute_readonly(
      "SELECT stock_code, industry FROM company_info ORDER BY stock_code", {1'000'000, std::chrono::seconds(10)});
  if (const auto* table = std::get_if<ResultTable>(&companies)) {
    for (const auto& row : table->rows) {
      const auto code = cell_to_string(row.at(0));
      index.upsert_text(Namespace::company, code, code, {{"code", code}, {"industry", cell_to_string(row.at(1))}});
    }
  }

  const auto& catalog = warehouse.catalog();
  for (const auto& [code, description] : catalog.category_codes) {
    index.upsert_text(Namespace::account, code, description, {{"code", code}});
  }
  for (const auto& e : mapping.entries()) {
    index.upsert_text(Namespace::account, std::string(store::to_string(e.format)) + ":" + e.raw_code, e.label,
                      {{"code", e.unified_code}, {"format", std::string(store::to_string(e.format))}});
  }
  for (const auto& [code, description] : catalog.ratio_codes) {
    index.upsert_text(Namespace::ratio, code, description, {{"code", code}});
  }
  spdlog::debug("indexed {} industries, {} companies, {} accounts, {} ratios", index.size(Namespace::industry),
                index.size(Namespace::company), index.size(Namespace::account), index.size(Namespace::ratio));
}

}  // namespace finstat::vec
