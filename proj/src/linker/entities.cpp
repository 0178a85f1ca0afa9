#include "finstat/linker/entities.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <map>

#include "finstat/core/prompts.hpp"
#include "finstat/core/text.hpp"

namespace finstat::linker {
namespace {

std::vector<std::string>* field(ExtractedEntities& e, std::string_view key) {
  if (key == "industry") return &e.industry;
  if (key == "company_name") return &e.company_name;
  if (key == "financial_statement_account") return &e.financial_statement_account;
  if (key == "financial_ratio") return &e.financial_ratio;
  return nullptr;
}

const std::vector<std::string>& field(const ExtractedEntities& e, std::string_view key) {
  return *field(const_cast<ExtractedEntities&>(e), key);
}

std::vector<LinkedTerm>& field(LinkedCandidates& l, std::string_view key) {
  if (key == "industry") return l.industry;
  if (key == "company_name") return l.company_name;
  if (key == "financial_statement_account") return l.financial_statement_account;
  return l.financial_ratio;
}

const std::vector<LinkedTerm>& field(const LinkedCandidates& l, std::string_view key) {
  return field(const_cast<LinkedCandidates&>(l), key);
}

vec::Namespace namespace_for(std::string_view key) {
  if (key == "industry") return vec::Namespace::industry;
  if (key == "company_name") return vec::Namespace::company;
  if (key == "financial_statement_account") return vec::Namespace::account;
  return vec::Namespace::ratio;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Case-insensitive whole-word search; returns npos when absent.
std::size_t find_word(std::string_view hay, std::string_view word) {
  const auto lower_hay = text::to_lower(hay);
  const auto lower_word = text::to_lower(word);
  std::size_t from = 0;
  while (true) {
    const auto at = lower_hay.find(lower_word, from);
    if (at == std::string::npos) return at;
    const bool left = at == 0 || !word_char(hay[at - 1]);
    const auto end = at + word.size();
    const bool right = end >= hay.size() || !word_char(hay[end]);
    if (left && right) return at;
    from = at + 1;
  }
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty() && out.back() != ' ') out += ' ';
    } else {
      out += c;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string_view extract_json_text(std::string_view reply) {
  const auto fence = reply.find("```");
  if (fence != std::string_view::npos) {
    auto body_start = reply.find('\n', fence + 3);
    if (body_start == std::string_view::npos) {
      body_start = fence + 3;  // single-line fence: ```{...}```
    } else {
      // Anything between the fence and the newline is a language tag unless it opens the JSON.
      const auto tag = text::trim(reply.substr(fence + 3, body_start - fence - 3));
      body_start = tag.starts_with("{") ? fence + 3 : body_start + 1;
    }
    const auto close = reply.find("```", body_start);
    return reply.substr(body_start, close == std::string_view::npos ? std::string_view::npos : close - body_start);
  }
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return {};
  return reply.substr(open, close - open + 1);
}

}  // namespace

bool ExtractedEntities::empty() const {
  return industry.empty() && company_name.empty() && financial_statement_account.empty() && financial_ratio.empty();
}

llm::PromptBundle render_entity_prompt(std::string_view task) {
  llm::PromptBundle bundle;
  bundle.user_turns.push_back(prompts::render_entity(task));
  bundle.decoding.temperature = 0.0;
  return bundle;
}

ParsedEntities parse_entity_reply(std::string_view reply) {
  const auto json_text = text::trim(extract_json_text(reply));
  if (json_text.empty()) throw EntityParseError("no JSON object in entity reply");
  const auto j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw EntityParseError("entity reply is not a JSON object");

  ParsedEntities out;
  for (const auto key : k_entity_keys) {
    auto& list = *field(out.entities, key);
    const auto it = j.find(std::string(key));
    if (it == j.end() || it->is_null()) {
      out.warnings.push_back("missing key '" + std::string(key) + "'");
      continue;
    }
    if (!it->is_array()) {
      if (it->is_string()) {
        list.push_back(it->get<std::string>());
        out.warnings.push_back("key '" + std::string(key) + "' is a string, not a list");
      } else {
        out.warnings.push_back("key '" + std::string(key) + "' is not a list");
      }
      continue;
    }
    for (const auto& item : *it) {
      if (item.is_string()) {
        const auto value = item.get<std::string>();
        const auto trimmed = text::trim(value);
        if (!trimmed.empty()) list.emplace_back(trimmed);
      } else {
        out.warnings.push_back("non-string item in '" + std::string(key) + "' ignored");
      }
    }
  }
  for (auto& note : apply_base_account_rule(out.entities)) out.warnings.push_back(std::move(note));
  return out;
}

bool has_growth_tag(std::string_view term) {
  return std::any_of(std::begin(k_growth_tags), std::end(k_growth_tags),
                     [&](std::string_view tag) { return find_word(term, tag) != std::string::npos; });
}

std::string strip_growth_tags(std::string_view term) {
  std::string s(term);
  for (const auto tag : k_growth_tags) {
    for (auto at = find_word(s, tag); at != std::string::npos; at = find_word(s, tag)) s.erase(at, tag.size());
  }
  // Leftover punctuation from forms like "Net Income (YoY)" or "Net Income - QoQ".
  s = collapse_spaces(s);
  for (const char* junk : {"()", "( )", "[]"}) {
    for (auto at = s.find(junk); at != std::string::npos; at = s.find(junk)) s.erase(at, std::strlen(junk));
  }
  s = collapse_spaces(s);
  while (!s.empty() && (s.back() == '-' || s.back() == ',' || s.back() == ' ')) s.pop_back();
  return std::string(text::trim(s));
}

std::vector<std::string> apply_base_account_rule(ExtractedEntities& entities) {
  std::vector<std::string> notes;
  std::vector<std::string> tagged;
  for (const auto* list : {&entities.financial_statement_account, &entities.financial_ratio}) {
    for (const auto& term : *list) {
      if (has_growth_tag(term)) tagged.push_back(term);
    }
  }
  for (const auto& term : tagged) {
    const auto base = strip_growth_tags(term);
    if (base.empty()) continue;
    auto& accounts = entities.financial_statement_account;
    const bool present = std::any_of(accounts.begin(), accounts.end(),
                                     [&](const std::string& a) { return text::iequals(a, base); });
    if (!present) {
      accounts.push_back(base);
      notes.push_back("added base account '" + base + "' for '" + term + "'");
    }
  }
  return notes;
}

std::size_t LinkedCandidates::candidate_count() const {
  std::size_t n = 0;
  for (const auto key : k_entity_keys) {
    for (const auto& t : field(*this, key)) n += t.candidates.size();
  }
  return n;
}

LinkedCandidates link_entities(const ExtractedEntities& entities, const vec::VectorIndex& index, std::size_t k) {
  LinkedCandidates out;
  for (const auto key : k_entity_keys) {
    const auto ns = namespace_for(key);
    for (const auto& term : field(entities, key)) {
      LinkedTerm linked{term, {}};
      std::map<std::string, std::size_t> seen;
      for (const auto& c : index.search(ns, term, k)) {
        const auto code_it = c.metadata.find("code");
        const auto code = code_it == c.metadata.end() ? c.id : code_it->second;
        if (seen.count(code)) continue;  // results arrive best-first
        seen[code] = linked.candidates.size();
        linked.candidates.push_back({code, c.id, c.surface_text, c.score});
      }
      field(out, key).push_back(std::move(linked));
    }
  }
  return out;
}

nlohmann::json to_json(const ExtractedEntities& entities) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto key : k_entity_keys) j[std::string(key)] = field(entities, key);
  return j;
}

ExtractedEntities entities_from_json(const nlohmann::json& j) {
  ExtractedEntities e;
  for (const auto key : k_entity_keys) {
    if (j.contains(std::string(key))) *field(e, key) = j.at(std::string(key)).get<std::vector<std::string>>();
  }
  return e;
}

nlohmann::json to_json(const LinkedCandidates& linked) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto key : k_entity_keys) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : field(linked, key)) {
      nlohmann::json cands = nlohmann::json::array();
      for (const auto& c : t.candidates) {
        cands.push_back({{"code", c.code}, {"id", c.id}, {"surface_text", c.surface_text}, {"score", c.score}});
      }
      terms.push_back({{"term", t.term}, {"candidates", std::move(cands)}});
    }
    j[std::string(key)] = std::move(terms);
  }
  return j;
}

}  // namespace finstat::linker
