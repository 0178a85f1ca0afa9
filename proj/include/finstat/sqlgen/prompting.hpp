#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "finstat/core/result_table.hpp"
#include "finstat/linker/entities.hpp"
#include "finstat/llm/provider.hpp"
#include "finstat/sqlgen/fewshots.hpp"
#include "finstat/store/catalog.hpp"

namespace finstat::sqlgen {

// Rows of a result table shown to the correction model.
inline constexpr std::size_t k_correction_row_cap = 20;

// Mapping block: one section per entity field, each candidate code once, in
// first-seen order. Labels come from the catalog where it knows the code.
// Empty when there are no candidates.
std::string render_mapping_block(const linker::LinkedCandidates& candidates, const store::SchemaCatalog& catalog);

std::string render_fewshot_block(const std::vector<FewShotExample>& examples);

// User turn of the generation prompt:
//   <task> ... </task>
//   <mapping_table> ... </mapping_table>   (elided when empty)
//   <exploration> ... </exploration>       (only when notes are given)
//   <examples> ... </examples>             (elided when empty)
//   closing instruction line
std::string render_generation_turn(std::string_view question, const std::string& mapping_block,
                                   const std::optional<std::string>& exploration_notes,
                                   const std::vector<FewShotExample>& fewshots);

// System text is the schema description prompt; one user turn; temperature 0.
llm::PromptBundle assemble_generation_prompt(std::string_view question, const store::SchemaCatalog& catalog,
                                             const linker::LinkedCandidates& candidates,
                                             const std::vector<FewShotExample>& fewshots,
                                             const std::optional<std::string>& exploration_notes = std::nullopt);

class SqlExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Last "### SQL Query" section, else the first fenced block, else the trimmed
// reply. Throws SqlExtractionError when the result is empty.
std::string extract_sql(std::string_view reply);
// Same search without the whole-reply fallback; nullopt when there is no
// SQL section or fence, or when it is empty.
std::optional<std::string> find_sql_block(std::string_view reply);

// The {sql_result} text for the correction template: the fixed-width table
// (at most `max_rows` rows), "" for an empty result, "Error (<kind>): <msg>"
// for other failures.
std::string render_sql_result(const ExecOutcome& outcome, std::size_t max_rows = k_correction_row_cap);

// Correction call: same system text as generation; user turns are the original
// generation turn, the SQL that ran, and the rendered self-correction template.
llm::PromptBundle render_correction_prompt(const llm::PromptBundle& generation, std::string_view sql,
                                           const ExecOutcome& outcome,
                                           std::size_t max_rows = k_correction_row_cap);

enum class Decision { yes, no };

std::string_view to_string(Decision decision);

struct CorrectionReply {
  Decision verdict = Decision::no;
  std::string reasoning;
  std::optional<std::string> new_sql;
  std::vector<std::string> warnings;
};

// "### Decision" is read case-insensitively; anything other than a leading
// yes/no, or a missing section, is a conservative No with a warning.
CorrectionReply parse_correction_reply(std::string_view reply);

// Exploration call for multistep mode: asks for up to `max_probes` fenced queries.
llm::PromptBundle render_exploration_prompt(std::string_view question, const std::string& mapping_block,
                                            std::size_t max_probes);
// Fenced blocks of the reply, in order, at most max_probes.
std::vector<std::string> extract_probe_queries(std::string_view reply, std::size_t max_probes);

}  // namespace finstat::sqlgen
