#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finstat/store/catalog.hpp"

namespace finstat::store {

// The three Vietnamese statement layouts that feed the warehouse.
enum class FormatKind { bank, corporation, securities };

std::string_view to_string(FormatKind kind);
std::optional<FormatKind> format_kind_from_string(std::string_view s);

struct MappingEntry {
  FormatKind format = FormatKind::corporation;
  std::string raw_code;
  std::string unified_code;
  std::string label;
};

// Universal account-code mapping: (format, raw code) -> unified category code.
class AccountMapping {
 public:
  AccountMapping() = default;

  // Throws std::invalid_argument on a duplicate (format, raw_code) pair.
  explicit AccountMapping(std::vector<MappingEntry> entries);

  // Tab-separated: format_kind, raw_code, unified_code, label; header row required.
  static AccountMapping parse_tsv(std::string_view tsv);

  // The mapping shipped with the repository (assets/account_mapping.tsv).
  static AccountMapping shipped();

  const MappingEntry* find(FormatKind format, std::string_view raw_code) const;
  bool covers(FormatKind format) const;
  const std::vector<MappingEntry>& entries() const { return entries_; }
  std::vector<const MappingEntry*> entries_for(FormatKind format) const;

  // Unified codes that are absent from catalog.category_codes.
  std::vector<std::string> codes_missing_from(const SchemaCatalog& catalog) const;

 private:
  std::vector<MappingEntry> entries_;
};

}  // namespace finstat::store
