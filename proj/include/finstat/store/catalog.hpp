#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace finstat::store {

enum class SemanticType { text, integer, money, ratio, boolean, date };

std::string_view to_string(SemanticType type);

struct ColumnDef {
  std::string name;
  SemanticType type = SemanticType::text;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;

  // Case-insensitive; nullptr when absent.
  const ColumnDef* find_column(std::string_view column) const;
};

// Tables, columns and code vocabularies of the financial warehouse. Ground
// truth for guard resolution and for rendering the mapping block of prompts.
struct SchemaCatalog {
  std::vector<TableDef> tables;
  std::map<std::string, std::string> category_codes;  // unified code -> description
  std::map<std::string, std::string> ratio_codes;     // ratio code -> description

  const TableDef* find_table(std::string_view table) const;
  std::vector<std::string> table_names() const;

  // The seven-table star schema with the shipped code vocabularies.
  static SchemaCatalog financial_warehouse();
};

nlohmann::json to_json(const SchemaCatalog& catalog);

}  // namespace finstat::store
