#include "finstat/store/mapping.hpp"

#include <set>
#include <stdexcept>

#include "finstat/core/assets.hpp"
#include "finstat/core/text.hpp"

namespace finstat::store {

std::string_view to_string(FormatKind kind) {
  switch (kind) {
    case FormatKind::bank: return "bank";
    case FormatKind::corporation: return "corporation";
    case FormatKind::securities: return "securities";
  }
  return "corporation";
}

std::optional<FormatKind> format_kind_from_string(std::string_view s) {
  const auto lower = text::to_lower(text::trim(s));
  if (lower == "bank") return FormatKind::bank;
  if (lower == "corporation") return FormatKind::corporation;
  if (lower == "securities") return FormatKind::securities;
  return std::nullopt;
}

AccountMapping::AccountMapping(std::vector<MappingEntry> entries) : entries_(std::move(entries)) {
  std::set<std::pair<FormatKind, std::string>> seen;
  for (const auto& e : entries_) {
    if (e.raw_code.empty() || e.unified_code.empty()) {
      throw std::invalid_argument("mapping entry with empty code");
    }
    if (!seen.emplace(e.format, e.raw_code).second) {
      throw std::invalid_argument("duplicate mapping for (" + std::string(to_string(e.format)) +
                                  ", " + e.raw_code + ")");
    }
  }
}

AccountMapping AccountMapping::parse_tsv(std::string_view tsv) {
  std::vector<MappingEntry> entries;
  const auto lines = text::split_lines(tsv);
  bool header = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.emplace_back(text::trim(line.substr(start, tab - start)));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4) {
      throw std::invalid_argument("mapping line " + std::to_string(i + 1) + ": expected 4 fields");
    }
    const auto format = format_kind_from_string(fields[0]);
    if (!format) {
      throw std::invalid_argument("mapping line " + std::to_string(i + 1) +
                                  ": unknown format kind '" + fields[0] + "'");
    }
    entries.push_back({*format, fields[1], fields[2], fields[3]});
  }
  return AccountMapping(std::move(entries));
}

AccountMapping AccountMapping::shipped() {
  return parse_tsv(assets::get("account_mapping.tsv"));
}

const MappingEntry* AccountMapping::find(FormatKind format, std::string_view raw_code) const {
  for (const auto& e : entries_) {
    if (e.format == format && e.raw_code == raw_code) return &e;
  }
  return nullptr;
}

bool AccountMapping::covers(FormatKind format) const {
  for (const auto& e : entries_) {
    if (e.format == format) return true;
  }
  return false;
}

std::vector<const MappingEntry*> AccountMapping::entries_for(FormatKind format) const {
  std::vector<const MappingEntry*> out;
  for (const auto& e : entries_) {
    if (e.format == format) out.push_back(&e);
  }
  return out;
}

std::vector<std::string> AccountMapping::codes_missing_from(const SchemaCatalog& catalog) const {
  std::set<std::string> missing;
  for (const auto& e : entries_) {
    if (catalog.category_codes.count(e.unified_code) == 0) missing.insert(e.unified_code);
  }
  return {missing.begin(), missing.end()};
}

}  // namespace finstat::store
