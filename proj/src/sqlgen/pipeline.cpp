#include "finstat/sqlgen/pipeline.hpp"

#include <ctime>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "finstat/core/text.hpp"

namespace finstat::sqlgen {
namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
 public:
  StageTimer(PipelineTrace& trace, std::string stage) : trace_(trace), stage_(std::move(stage)), start_(Clock::now()) {}
  ~StageTimer() {
    trace_.timings.push_back(
        {std::move(stage_), std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start_)});
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  PipelineTrace& trace_;
  std::string stage_;
  Clock::time_point start_;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Guard first; only an admitted statement reaches the warehouse.
SqlAttempt run_attempt(std::size_t iteration, std::string sql, const PipelineContext& ctx,
                       const PipelineConfig& config) {
  SqlAttempt a;
  a.iteration = iteration;
  a.sql = std::move(sql);
  a.guard = guard::check_sql(a.sql, ctx.warehouse->catalog(), config.policy);
  if (!a.guard.admitted()) {
    a.execution = ExecError{ExecErrorKind::semantic, "rejected by SQL guard:\n" + a.guard.describe()};
    return a;
  }
  a.executed_sql = a.guard.effective_sql(a.sql);
  a.execution = ctx.warehouse->execute_readonly(*a.executed_sql, config.exec_limits);
  return a;
}

std::string render_probe(std::size_t n, const ProbeRecord& p) {
  std::string out = "-- probe " + std::to_string(n) + "\n" + p.sql + "\n";
  if (!p.execution) return out + "Rejected by SQL guard: " + p.guard.describe();
  const auto rendered = render_sql_result(*p.execution, k_correction_row_cap);
  return out + (rendered.empty() ? std::string("(no rows)") : rendered);
}

void explore(PipelineTrace& trace, const std::string& mapping_block, const PipelineContext& ctx,
             const PipelineConfig& config, llm::CallLog& log) {
  const auto bundle = render_exploration_prompt(trace.question, mapping_block, config.max_probes);
  const auto reply = ctx.gateway->complete(bundle, &log, "exploration");
  std::vector<std::string> rendered;
  for (auto& sql : extract_probe_queries(reply.text, config.max_probes)) {
    ProbeRecord p;
    p.sql = std::move(sql);
    p.guard = guard::check_sql(p.sql, ctx.warehouse->catalog(), config.probe_policy);
    if (p.guard.admitted()) {
      p.execution = ctx.warehouse->execute_readonly(p.guard.effective_sql(p.sql), config.probe_limits);
    }
    rendered.push_back(render_probe(trace.probes.size() + 1, p));
    trace.probes.push_back(std::move(p));
  }
  std::string notes;
  for (const auto& r : rendered) notes += (notes.empty() ? "" : "\n\n") + r;
  trace.exploration_notes = notes.empty() ? std::string("(no exploratory queries proposed)") : notes;
}

void run_stages(PipelineOutcome& out, const PipelineContext& ctx, const PipelineConfig& config, llm::CallLog& log) {
  auto& trace = out.trace;
  const auto& catalog = ctx.warehouse->catalog();

  {
    StageTimer t(trace, "entity_extraction");
    const auto reply = ctx.gateway->complete(linker::render_entity_prompt(trace.question), &log, "entity_extraction");
    try {
      auto parsed = linker::parse_entity_reply(reply.text);
      trace.entities = std::move(parsed.entities);
      trace.entity_warnings = std::move(parsed.warnings);
    } catch (const linker::EntityParseError& e) {
      trace.entity_warnings.push_back(std::string("entity reply unusable, continuing without entities: ") + e.what());
    }
  }
  {
    StageTimer t(trace, "linking");
    trace.candidates = linker::link_entities(trace.entities, *ctx.index, config.candidate_k);
  }
  const auto mapping_block = render_mapping_block(trace.candidates, catalog);

  if (config.multistep) {
    StageTimer t(trace, "exploration");
    explore(trace, mapping_block, ctx, config, log);
  }

  std::vector<FewShotExample> shots;
  {
    StageTimer t(trace, "fewshot_retrieval");
    if (ctx.fewshots) trace.fewshots = retrieve_fewshots(*ctx.index, *ctx.fewshots, trace.question, config.fewshot_k);
    for (const auto& hit : trace.fewshots) shots.push_back(hit.example);
  }

  llm::PromptBundle generation;
  std::string sql;
  {
    StageTimer t(trace, "generation");
    generation = assemble_generation_prompt(trace.question, catalog, trace.candidates, shots, trace.exploration_notes);
    const auto reply = ctx.gateway->complete(generation, &log, "generation");
    // An empty extraction still goes through the guard, which reports it as a syntax reject.
    try {
      sql = extract_sql(reply.text);
    } catch (const SqlExtractionError&) {
      sql.clear();
    }
  }

  for (std::size_t iteration = 0;; ++iteration) {
    {
      StageTimer t(trace, "attempt_" + std::to_string(iteration));
      trace.attempts.push_back(run_attempt(iteration, sql, ctx, config));
    }
    auto& attempt = trace.attempts.back();
    if (iteration == config.max_iterations) {
      out.status = OutcomeStatus::exhausted;
      return;
    }

    StageTimer t(trace, "correction_" + std::to_string(iteration));
    const auto shown_sql = attempt.executed_sql.value_or(attempt.sql);
    const auto bundle = render_correction_prompt(generation, shown_sql, attempt.execution, config.correction_rows);
    const auto reply = ctx.gateway->complete(bundle, &log, "correction_" + std::to_string(iteration));
    auto parsed = parse_correction_reply(reply.text);

    const auto* table = std::get_if<ResultTable>(&attempt.execution);
    if (parsed.verdict == Decision::yes && !table) {
      parsed.verdict = Decision::no;
      parsed.warnings.push_back("YES on an attempt without a result table; treated as No");
    }
    attempt.correction_decision = CorrectionDecision{parsed.verdict, parsed.reasoning, parsed.warnings};
    if (parsed.verdict == Decision::yes) {
      out.status = OutcomeStatus::answered;
      out.final_table = *table;
      return;
    }
    if (parsed.new_sql) sql = *parsed.new_sql;
  }
}

nlohmann::json opt_json(const std::optional<std::string>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

}  // namespace

guard::QueryPolicy PipelineConfig::default_probe_policy() {
  guard::QueryPolicy p;
  p.require_quarter_condition = false;
  p.max_limit = 50;
  return p;
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.multistep = j.value("multistep", c.multistep);
  c.max_probes = j.value("max_probes", c.max_probes);
  c.fewshot_k = j.value("fewshot_k", c.fewshot_k);
  c.candidate_k = j.value("candidate_k", c.candidate_k);
  c.correction_rows = j.value("correction_rows", c.correction_rows);
  c.exec_limits.row_cap = j.value("row_cap", c.exec_limits.row_cap);
  c.exec_limits.timeout = std::chrono::milliseconds(j.value("exec_timeout_ms", c.exec_limits.timeout.count()));
  c.probe_limits.row_cap = j.value("probe_row_cap", c.probe_limits.row_cap);
  if (j.contains("policy")) c.policy = guard::policy_from_json(j.at("policy"));
  if (j.contains("probe_policy")) c.probe_policy = guard::policy_from_json(j.at("probe_policy"));
  if (c.candidate_k == 0) throw std::invalid_argument("candidate_k must be positive");
  return c;
}

nlohmann::json to_json(const PipelineConfig& c) {
  return {{"max_iterations", c.max_iterations},
          {"multistep", c.multistep},
          {"max_probes", c.max_probes},
          {"fewshot_k", c.fewshot_k},
          {"candidate_k", c.candidate_k},
          {"correction_rows", c.correction_rows},
          {"row_cap", c.exec_limits.row_cap},
          {"exec_timeout_ms", c.exec_limits.timeout.count()},
          {"probe_row_cap", c.probe_limits.row_cap},
          {"policy", guard::to_json(c.policy)},
          {"probe_policy", guard::to_json(c.probe_policy)}};
}

std::string_view to_string(OutcomeStatus status) {
  switch (status) {
    case OutcomeStatus::answered: return "answered";
    case OutcomeStatus::exhausted: return "exhausted";
    case OutcomeStatus::failed: return "failed";
  }
  return "failed";
}

std::string new_trace_id() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  return fmt::format("{:016x}{:016x}", rng(), rng());
}

PipelineOutcome run_pipeline(std::string_view question, const PipelineContext& context, const PipelineConfig& config,
                             const TraceIdCallback& on_trace_id) {
  PipelineOutcome out;
  auto& trace = out.trace;
  trace.trace_id = new_trace_id();
  trace.created_at = utc_now();
  trace.question = std::string(text::trim(question));
  trace.max_iterations = config.max_iterations;
  if (on_trace_id) on_trace_id(trace.trace_id);

  llm::CallLog log;
  try {
    run_stages(out, context, config, log);
  } catch (const llm::LlmError& e) {
    out.status = OutcomeStatus::failed;
    out.final_table.reset();
    trace.error = e.what();
    spdlog::warn("trace {}: {}", trace.trace_id, e.what());
  }
  trace.calls = log.records();
  return out;
}

nlohmann::json to_json(const ProbeRecord& p) {
  nlohmann::json j{{"sql", p.sql}, {"guard", guard::to_json(p.guard)}};
  j["execution"] = p.execution ? to_json(*p.execution) : nlohmann::json();
  return j;
}

nlohmann::json to_json(const SqlAttempt& a) {
  nlohmann::json j{{"iteration", a.iteration},
                   {"sql", a.sql},
                   {"guard", guard::to_json(a.guard)},
                   {"executed_sql", opt_json(a.executed_sql)},
                   {"execution", to_json(a.execution)}};
  if (a.correction_decision) {
    j["correction_decision"] = {{"verdict", to_string(a.correction_decision->verdict)},
                                {"reasoning", a.correction_decision->reasoning},
                                {"warnings", a.correction_decision->warnings}};
  } else {
    j["correction_decision"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const llm::CallRecord& call, bool include_volatile) {
  nlohmann::json j{{"stage", call.stage},
                   {"prompt", llm::to_json(call.bundle)},
                   {"prompt_sha256", text::sha256_hex(call.bundle.concatenated())},
                   {"attempts", call.attempts},
                   {"error", opt_json(call.error)}};
  j["reply"] = call.reply ? llm::to_json(*call.reply, include_volatile) : nlohmann::json();
  return j;
}

nlohmann::json to_json(const PipelineOutcome& outcome, bool include_volatile) {
  const auto& t = outcome.trace;
  nlohmann::json j;
  j["schema"] = k_trace_schema;
  j["status"] = to_string(outcome.status);
  j["question"] = t.question;
  j["max_iterations"] = t.max_iterations;
  j["final_table"] = outcome.final_table ? to_json(*outcome.final_table) : nlohmann::json();
  j["entities"] = linker::to_json(t.entities);
  j["entity_warnings"] = t.entity_warnings;
  j["candidates"] = linker::to_json(t.candidates);
  j["exploration_notes"] = opt_json(t.exploration_notes);
  j["probes"] = nlohmann::json::array();
  for (const auto& p : t.probes) j["probes"].push_back(to_json(p));
  j["fewshots"] = nlohmann::json::array();
  for (const auto& f : t.fewshots) j["fewshots"].push_back(to_json(f));
  j["attempts"] = nlohmann::json::array();
  for (const auto& a : t.attempts) j["attempts"].push_back(to_json(a));
  j["model_replies"] = nlohmann::json::array();
  for (const auto& c : t.calls) j["model_replies"].push_back(to_json(c, include_volatile));
  j["error"] = opt_json(t.error);
  if (include_volatile) {
    j["trace_id"] = t.trace_id;
    j["created_at"] = t.created_at;
    nlohmann::json timings = nlohmann::json::array();
    for (const auto& s : t.timings) {
      timings.push_back({{"stage", s.stage}, {"ms", static_cast<double>(s.elapsed.count()) / 1000.0}});
    }
    j["timings"] = std::move(timings);
  }
  return j;
}

std::string canonical_trace(const PipelineOutcome& outcome) { return to_json(outcome, false).dump(2); }

std::map<std::string, std::string> replay_table(const nlohmann::json& trace) {
  std::map<std::string, std::string> out;
  for (const auto& call : trace.value("model_replies", nlohmann::json::array())) {
    if (call.contains("reply") && call["reply"].is_object()) {
      out[call.at("prompt_sha256").get<std::string>()] = call["reply"].at("text").get<std::string>();
    }
  }
  return out;
}

}  // namespace finstat::sqlgen
