#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "finstat/core/result_table.hpp"
#include "finstat/guard/validator.hpp"
#include "finstat/linker/entities.hpp"
#include "finstat/llm/gateway.hpp"
#include "finstat/sqlgen/fewshots.hpp"
#include "finstat/sqlgen/prompting.hpp"
#include "finstat/store/warehouse.hpp"
#include "finstat/vec/index.hpp"

namespace finstat::sqlgen {

inline constexpr std::string_view k_trace_schema = "finstat.trace/v1";

struct PipelineConfig {
  std::size_t max_iterations = 3;
  bool multistep = false;
  std::size_t max_probes = 3;
  std::size_t fewshot_k = 3;
  std::size_t candidate_k = linker::k_default_link_depth;
  std::size_t correction_rows = k_correction_row_cap;
  store::ExecLimits exec_limits;
  store::ExecLimits probe_limits{50, std::chrono::milliseconds{2000}};
  guard::QueryPolicy policy;
  guard::QueryPolicy probe_policy = default_probe_policy();

  // Probes may look at whole columns; LIMIT is still forced, clamped at 50.
  static guard::QueryPolicy default_probe_policy();
};

// Unknown keys are ignored; missing keys keep their defaults.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& config);

struct ProbeRecord {
  std::string sql;
  guard::ValidationReport guard;
  std::optional<ExecOutcome> execution;  // absent when the guard rejected it
};

struct CorrectionDecision {
  Decision verdict = Decision::no;
  std::string reasoning;
  std::vector<std::string> warnings;
};

struct SqlAttempt {
  std::size_t iteration = 0;
  std::string sql;  // as extracted from the model reply
  guard::ValidationReport guard;
  std::optional<std::string> executed_sql;  // set only when the guard admitted the SQL
  ExecOutcome execution;
  std::optional<CorrectionDecision> correction_decision;
};

struct StageTiming {
  std::string stage;
  std::chrono::microseconds elapsed{0};
};

struct PipelineTrace {
  std::string trace_id;
  std::string created_at;
  std::string question;
  std::size_t max_iterations = 0;
  linker::ExtractedEntities entities;
  std::vector<std::string> entity_warnings;
  linker::LinkedCandidates candidates;
  std::optional<std::string> exploration_notes;
  std::vector<ProbeRecord> probes;
  std::vector<FewShotHit> fewshots;
  std::vector<SqlAttempt> attempts;
  std::vector<llm::CallRecord> calls;
  std::vector<StageTiming> timings;
  std::optional<std::string> error;
};

enum class OutcomeStatus { answered, exhausted, failed };

std::string_view to_string(OutcomeStatus status);

struct PipelineOutcome {
  OutcomeStatus status = OutcomeStatus::failed;
  std::optional<ResultTable> final_table;
  PipelineTrace trace;
};

// Shared read-only components. One context serves concurrent runs.
struct PipelineContext {
  std::shared_ptr<const store::Warehouse> warehouse;
  std::shared_ptr<const vec::VectorIndex> index;
  std::shared_ptr<const FewShotStore> fewshots;
  std::shared_ptr<llm::Gateway> gateway;
};

// Optional hook fired once the trace id is known, before any stage runs.
using TraceIdCallback = std::function<void(const std::string&)>;

// Stages in order: entity extraction, linking, optional exploration, few-shot
// retrieval, generation, then guard -> execute -> correction until the model
// answers YES on a result table or max_iterations corrections are spent.
// Gateway errors end the run with status failed; nothing else throws.
PipelineOutcome run_pipeline(std::string_view question, const PipelineContext& context,
                             const PipelineConfig& config, const TraceIdCallback& on_trace_id = {});

std::string new_trace_id();

// Trace document. With include_volatile = false, trace_id, created_at,
// timings and reply latencies are left out so two runs compare byte for byte.
nlohmann::json to_json(const PipelineOutcome& outcome, bool include_volatile = true);
std::string canonical_trace(const PipelineOutcome& outcome);

nlohmann::json to_json(const SqlAttempt& attempt);
nlohmann::json to_json(const ProbeRecord& probe);
nlohmann::json to_json(const llm::CallRecord& call, bool include_volatile);

// {prompt_sha256 -> reply text} for every answered call in a trace document;
// feeds llm::ReplayProvider to re-run a question from its trace.
std::map<std::string, std::string> replay_table(const nlohmann::json& trace);

}  // namespace finstat::sqlgen
