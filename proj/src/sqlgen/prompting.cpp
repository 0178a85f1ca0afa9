#include "finstat/sqlgen/prompting.hpp"

#include <cctype>
#include <set>

#include "finstat/core/prompts.hpp"
#include "finstat/core/text.hpp"

namespace finstat::sqlgen {
namespace {

constexpr std::string_view k_generation_instruction =
    "Write one SQL query that answers the task and return it under a \"### SQL Query:\" heading.";

struct Section {
  std::string name;  // lower-cased heading text without '#' and ':'
  std::string body;
};

struct Fence {
  std::string body;
};

bool is_fence_line(std::string_view line) { return text::trim(line).starts_with("```"); }

// Fenced blocks in order. The info string after the opening fence is dropped;
// an unterminated fence runs to the end of the text.
std::vector<Fence> fences_of(std::string_view s) {
  std::vector<Fence> out;
  bool open = false;
  std::string body;
  for (const auto& line : text::split_lines(s)) {
    if (is_fence_line(line)) {
      if (open) {
        out.push_back({body});
        body.clear();
      }
      open = !open;
      continue;
    }
    if (open) {
      if (!body.empty() || !line.empty()) body += body.empty() ? line : "\n" + line;
    }
  }
  if (open) out.push_back({body});
  return out;
}

// "### Heading: inline text" splits the reply; fenced lines never start a heading.
std::vector<Section> sections_of(std::string_view s) {
  std::vector<Section> out;
  bool in_fence = false;
  for (const auto& line : text::split_lines(s)) {
    const auto trimmed = text::trim(line);
    if (is_fence_line(trimmed)) in_fence = !in_fence;
    if (!in_fence && trimmed.starts_with("###")) {
      auto heading = trimmed;
      while (!heading.empty() && heading.front() == '#') heading.remove_prefix(1);
      std::string inline_text;
      if (const auto colon = heading.find(':'); colon != std::string_view::npos) {
        inline_text = std::string(text::trim(heading.substr(colon + 1)));
        heading = heading.substr(0, colon);
      }
      std::string name = text::to_lower(text::trim(heading));
      while (!name.empty() && name.back() == '*') name.pop_back();
      while (!name.empty() && name.front() == '*') name.erase(name.begin());
      out.push_back({name, inline_text});
      continue;
    }
    if (out.empty()) continue;
    auto& body = out.back().body;
    body += body.empty() ? line : "\n" + line;
  }
  for (auto& sec : out) sec.body = std::string(text::trim(sec.body));
  return out;
}

std::optional<std::string> sql_from_section(const std::string& body) {
  const auto fences = fences_of(body);
  std::string sql = fences.empty() ? body : fences.front().body;
  sql = std::string(text::trim(sql));
  if (sql.empty()) return std::nullopt;
  return sql;
}

std::string task_and_mapping(std::string_view question, const std::string& mapping_block) {
  std::string out = "<task>\n" + std::string(text::trim(question)) + "\n</task>\n";
  if (!mapping_block.empty()) out += mapping_block;
  return out;
}

}  // namespace

std::string render_mapping_block(const linker::LinkedCandidates& candidates, const store::SchemaCatalog& catalog) {
  struct Field {
    std::string_view heading;
    const std::vector<linker::LinkedTerm>* terms;
    const std::map<std::string, std::string>* labels;
  };
  const Field fields[] = {
      {"industry", &candidates.industry, nullptr},
      {"company_name (stock_code)", &candidates.company_name, nullptr},
      {"financial_statement_account (category_code)", &candidates.financial_statement_account,
       &catalog.category_codes},
      {"financial_ratio (ratio_code)", &candidates.financial_ratio, &catalog.ratio_codes},
  };

  std::string body;
  for (const auto& field : fields) {
    std::set<std::string> seen;
    std::string lines;
    for (const auto& term : *field.terms) {
      for (const auto& c : term.candidates) {
        if (!seen.insert(c.code).second) continue;
        std::string label = c.surface_text;
        if (field.labels) {
          if (const auto it = field.labels->find(c.code); it != field.labels->end()) label = it->second;
        }
        lines += "- " + c.code + ": " + label + "\n";
      }
    }
    if (!lines.empty()) body += std::string(field.heading) + ":\n" + lines;
  }
  if (body.empty()) return {};
  return "<mapping_table>\n" + body + "</mapping_table>\n";
}

std::string render_fewshot_block(const std::vector<FewShotExample>& examples) {
  if (examples.empty()) return {};
  std::string out = "<examples>\n";
  for (const auto& ex : examples) {
    out += "### Question:\n" + std::string(text::trim(ex.question)) + "\n";
    out += "### SQL Query:\n```sql\n" + std::string(text::trim(ex.sql)) + "\n```\n";
    if (ex.commentary) out += "### Note:\n" + std::string(text::trim(*ex.commentary)) + "\n";
  }
  return out + "</examples>\n";
}

std::string render_generation_turn(std::string_view question, const std::string& mapping_block,
                                   const std::optional<std::string>& exploration_notes,
                                   const std::vector<FewShotExample>& fewshots) {
  std::string out = task_and_mapping(question, mapping_block);
  if (exploration_notes) out += "<exploration>\n" + *exploration_notes + "\n</exploration>\n";
  out += render_fewshot_block(fewshots);
  out += k_generation_instruction;
  return out;
}

llm::PromptBundle assemble_generation_prompt(std::string_view question, const store::SchemaCatalog& catalog,
                                             const linker::LinkedCandidates& candidates,
                                             const std::vector<FewShotExample>& fewshots,
                                             const std::optional<std::string>& exploration_notes) {
  llm::PromptBundle bundle;
  bundle.system_text = prompts::render_schema();
  bundle.user_turns.push_back(
      render_generation_turn(question, render_mapping_block(candidates, catalog), exploration_notes, fewshots));
  return bundle;
}

std::optional<std::string> find_sql_block(std::string_view reply) {
  const auto sections = sections_of(reply);
  for (auto it = sections.rbegin(); it != sections.rend(); ++it) {
    if (it->name.starts_with("sql")) return sql_from_section(it->body);
  }
  for (const auto& f : fences_of(reply)) {
    const auto sql = text::trim(f.body);
    if (!sql.empty()) return std::string(sql);
  }
  return std::nullopt;
}

std::string extract_sql(std::string_view reply) {
  if (auto sql = find_sql_block(reply)) return *sql;
  for (const auto& s : sections_of(reply)) {
    if (s.name.starts_with("sql")) throw SqlExtractionError("empty SQL Query section");
  }
  const auto whole = text::trim(reply);
  if (whole.empty()) throw SqlExtractionError("model reply contains no SQL");
  return std::string(whole);
}

std::string render_sql_result(const ExecOutcome& outcome, std::size_t max_rows) {
  if (const auto* table = std::get_if<ResultTable>(&outcome)) {
    auto rendered = render_table(*table, max_rows);
    while (!rendered.empty() && rendered.back() == '\n') rendered.pop_back();
    return rendered;
  }
  const auto& err = std::get<ExecError>(outcome);
  if (err.kind == ExecErrorKind::empty) return {};
  return "Error (" + std::string(to_string(err.kind)) + "): " + err.message;
}

llm::PromptBundle render_correction_prompt(const llm::PromptBundle& generation, std::string_view sql,
                                           const ExecOutcome& outcome, std::size_t max_rows) {
  llm::PromptBundle bundle = generation;
  bundle.user_turns.push_back("### SQL Query:\n```sql\n" + std::string(text::trim(sql)) + "\n```");
  bundle.user_turns.push_back(prompts::render_correction(render_sql_result(outcome, max_rows)));
  return bundle;
}

std::string_view to_string(Decision decision) { return decision == Decision::yes ? "yes" : "no"; }

CorrectionReply parse_correction_reply(std::string_view reply) {
  CorrectionReply out;
  const auto sections = sections_of(reply);
  const Section* decision = nullptr;
  const Section* reasoning = nullptr;
  for (const auto& s : sections) {
    if (!decision && s.name == "decision") decision = &s;
    if (!reasoning && s.name == "reasoning") reasoning = &s;
  }

  if (!decision) {
    out.verdict = Decision::no;
    out.reasoning = std::string(text::trim(reply));
    out.warnings.push_back("no Decision section; treated as No");
    return out;
  }

  std::string word;
  for (char ch : text::to_lower(decision->body)) {
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      word += ch;
    } else if (!word.empty() || (ch != '*' && ch != '_' && !std::isspace(static_cast<unsigned char>(ch)))) {
      break;
    }
  }
  if (word == "yes") {
    out.verdict = Decision::yes;
  } else {
    out.verdict = Decision::no;
    if (word != "no") out.warnings.push_back("unrecognised decision \"" + decision->body + "\"; treated as No");
  }
  if (reasoning) out.reasoning = reasoning->body;

  auto sql = find_sql_block(reply);
  if (out.verdict == Decision::no) {
    out.new_sql = std::move(sql);
  } else if (sql) {
    out.warnings.push_back("SQL after a YES decision ignored");
  }
  return out;
}

llm::PromptBundle render_exploration_prompt(std::string_view question, const std::string& mapping_block,
                                            std::size_t max_probes) {
  llm::PromptBundle bundle;
  bundle.system_text = prompts::render_schema();
  bundle.user_turns.push_back(task_and_mapping(question, mapping_block) + "<exploration_request>\n" +
                              "Before writing the final query, propose at most " + std::to_string(max_probes) +
                              " short exploratory SELECT queries (for example DISTINCT code lookups or row counts)"
                              " that show which data exists for this task. Put each query in its own ```sql"
                              " fenced block.\n</exploration_request>");
  return bundle;
}

std::vector<std::string> extract_probe_queries(std::string_view reply, std::size_t max_probes) {
  std::vector<std::string> out;
  for (const auto& f : fences_of(reply)) {
    if (out.size() == max_probes) break;
    const auto sql = text::trim(f.body);
    if (!sql.empty()) out.emplace_back(sql);
  }
  return out;
}

}  // namespace finstat::sqlgen
