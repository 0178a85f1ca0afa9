#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "finstat/core/result_table.hpp"
#include "finstat/llm/gateway.hpp"
#include "finstat/sqlgen/pipeline.hpp"

namespace finstat::eval {

struct Mcq {
  std::string stem;
  std::vector<std::string> options;  // 2 to 5
  std::size_t correct_index = 0;
  bool allow_idk = false;
};

// Throws std::invalid_argument when the option count or correct_index is out of range.
void validate(const Mcq& mcq);

struct EvalItem {
  std::string id;
  std::string question;
  std::string gold_sql;
  std::vector<Mcq> mcqs;  // 1 to 5
};

// One JSON object per line: {"id"?, "question", "gold_sql", "mcqs": [{"stem",
// "options", "correct_index", "allow_idk"?}]}. Blank lines are skipped.
std::vector<EvalItem> parse_eval_jsonl(std::string_view jsonl);
nlohmann::json to_json(const Mcq& mcq);
nlohmann::json to_json(const EvalItem& item);

inline constexpr std::string_view k_idk_text = "I don't know";

// Judge prompt for one MCQ: the question, the answer table (or a note that
// there is none), the stem and lettered options, plus an "I don't know"
// option when allowed. The reply is expected as "Answer: <letter>".
llm::PromptBundle render_judge_prompt(std::string_view question, const ResultTable& answer, const Mcq& mcq);

struct JudgeChoice {
  std::optional<std::size_t> option;  // chosen option index
  bool idk = false;
  bool parsed = false;
};

JudgeChoice parse_judge_reply(std::string_view reply, const Mcq& mcq);

struct McqVerdict {
  std::optional<std::size_t> selected;
  bool idk = false;
  bool correct = false;
  bool judged = false;  // false when the prediction had no table
  std::optional<std::string> warning;
};

struct McqResult {
  std::vector<McqVerdict> verdicts;
  std::size_t correct = 0;
  double accuracy = 0;
};

// One judge call per MCQ, so verdicts are independent of each other. An
// unanswered prediction scores every MCQ incorrect without calling the judge.
// "I don't know" and unparseable replies count as incorrect.
McqResult mcq_judge(std::string_view question, const std::optional<ResultTable>& answer,
                    const std::vector<Mcq>& mcqs, llm::Gateway& judge, llm::CallLog* log = nullptr);

struct RecordScores {
  bool em = false;
  double cm = 0;
  bool ex = false;
  double ves = 0;
  std::size_t mcq_correct = 0;
  std::size_t mcq_total = 0;
  sqlgen::OutcomeStatus status = sqlgen::OutcomeStatus::failed;
  double latency_ms = 0;
};

nlohmann::json to_json(const RecordScores& scores);

struct MetricsReport {
  std::size_t records = 0;
  double em = 0;
  double cm = 0;
  double ex = 0;
  double ves = 0;
  // Pooled over every MCQ of the batch; nullopt when the batch has none.
  std::optional<double> mcq_accuracy;
  std::size_t mcq_total = 0;
  std::map<std::string, std::size_t> status_counts;  // answered / exhausted / failed
  double latency_p50_ms = 0;
  double latency_p90_ms = 0;
  double latency_max_ms = 0;
};

// Unweighted means per metric. Latency percentiles use the nearest-rank method.
// Throws std::invalid_argument on an empty batch.
MetricsReport aggregate(const std::vector<RecordScores>& records);

nlohmann::json to_json(const MetricsReport& report);
std::string render_report(const MetricsReport& report);

struct EvalRecordResult {
  EvalItem item;
  ResultTable gold_table;
  sqlgen::PipelineOutcome prediction;
  std::optional<std::string> predicted_sql;
  McqResult mcq;
  RecordScores scores;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const EvalRecordResult& result);

struct EvalOptions {
  // Executions per SQL when timing for VES; the median is used.
  std::size_t timing_runs = 3;
};

// Runs the pipeline on the item, executes gold and prediction for EX/VES,
// computes EM/CM on the last attempt's SQL, and asks the judge the MCQs.
EvalRecordResult evaluate_item(const EvalItem& item, const sqlgen::PipelineContext& context,
                               const sqlgen::PipelineConfig& config, llm::Gateway& judge,
                               const EvalOptions& options = {});

}  // namespace finstat::eval
