#include "finstat/eval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <stdexcept>

#include <fmt/format.h>

#include "finstat/core/text.hpp"
#include "finstat/eval/metrics.hpp"

namespace finstat::eval {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t k_judge_table_rows = 50;

char letter(std::size_t i) { return static_cast<char>('A' + i); }

std::size_t option_slots(const Mcq& mcq) { return mcq.options.size() + (mcq.allow_idk ? 1 : 0); }

double seconds_since(Clock::time_point start) {
  return std::max(std::chrono::duration<double>(Clock::now() - start).count(), 1e-9);
}

// Median wall time of `runs` executions, in seconds.
double time_sql(const store::Warehouse& w, const std::string& sql, const store::ExecLimits& limits,
                std::size_t runs) {
  std::vector<double> samples;
  for (std::size_t i = 0; i < std::max<std::size_t>(runs, 1); ++i) {
    const auto start = Clock::now();
    (void)w.execute_readonly(sql, limits);
    samples.push_back(seconds_since(start));
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

double nearest_rank(const std::vector<double>& sorted, double p) {
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

}  // namespace

void validate(const Mcq& mcq) {
  if (mcq.options.size() < 2 || mcq.options.size() > 5) {
    throw std::invalid_argument("an MCQ needs 2 to 5 options, got " + std::to_string(mcq.options.size()));
  }
  if (mcq.correct_index >= mcq.options.size()) throw std::invalid_argument("correct_index out of range");
}

std::vector<EvalItem> parse_eval_jsonl(std::string_view jsonl) {
  std::vector<EvalItem> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto where = "eval line " + std::to_string(line_no) + ": ";
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw std::invalid_argument(where + "not a JSON object");
    try {
      EvalItem item;
      item.id = j.value("id", std::to_string(out.size() + 1));
      item.question = j.at("question").get<std::string>();
      item.gold_sql = j.at("gold_sql").get<std::string>();
      for (const auto& m : j.at("mcqs")) {
        Mcq mcq{m.at("stem").get<std::string>(), m.at("options").get<std::vector<std::string>>(),
                m.at("correct_index").get<std::size_t>(), m.value("allow_idk", false)};
        validate(mcq);
        item.mcqs.push_back(std::move(mcq));
      }
      if (item.mcqs.empty() || item.mcqs.size() > 5) throw std::invalid_argument("a record needs 1 to 5 MCQs");
      out.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(where + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    }
  }
  return out;
}

nlohmann::json to_json(const Mcq& mcq) {
  return {{"stem", mcq.stem}, {"options", mcq.options}, {"correct_index", mcq.correct_index},
          {"allow_idk", mcq.allow_idk}};
}

nlohmann::json to_json(const EvalItem& item) {
  nlohmann::json mcqs = nlohmann::json::array();
  for (const auto& m : item.mcqs) mcqs.push_back(to_json(m));
  return {{"id", item.id}, {"question", item.question}, {"gold_sql", item.gold_sql}, {"mcqs", mcqs}};
}

llm::PromptBundle render_judge_prompt(std::string_view question, const ResultTable& answer, const Mcq& mcq) {
  llm::PromptBundle b;
  b.system_text =
      "You grade answers to questions about Vietnamese company financial data. Judge only from the answer table.";
  std::string user = "<question>\n" + std::string(text::trim(question)) + "\n</question>\n<answer_table>\n";
  auto table = render_table(answer, k_judge_table_rows);
  while (!table.empty() && table.back() == '\n') table.pop_back();
  user += table + "\n</answer_table>\n<mcq>\n" + mcq.stem + "\n";
  for (std::size_t i = 0; i < mcq.options.size(); ++i) user += fmt::format("{}. {}\n", letter(i), mcq.options[i]);
  if (mcq.allow_idk) user += fmt::format("{}. {}\n", letter(mcq.options.size()), k_idk_text);
  user += "</mcq>\nReply with \"Answer: <letter>\" for exactly one option.";
  if (mcq.allow_idk) {
    user += fmt::format(" Choose {} ({}) if the table is not enough to decide.", letter(mcq.options.size()),
                        k_idk_text);
  }
  b.user_turns.push_back(std::move(user));
  return b;
}

JudgeChoice parse_judge_reply(std::string_view reply, const Mcq& mcq) {
  JudgeChoice c;
  const auto slots = option_slots(mcq);
  const auto pick = [&](char ch) {
    const auto i = static_cast<std::size_t>(std::toupper(static_cast<unsigned char>(ch)) - 'A');
    if (i >= slots) return false;
    c.parsed = true;
    if (mcq.allow_idk && i == mcq.options.size()) {
      c.idk = true;
    } else {
      c.option = i;
    }
    return true;
  };

  const std::string s(reply);
  static const std::regex answer_re(R"(answer\s*[:=\-]?\s*\**\s*\(?([A-Za-z])\)?(?![A-Za-z']))", std::regex::icase);
  static const std::regex bare_re(R"(^\s*\**\(?([A-Za-z])\)?[.)]?\**\s*$)");
  std::smatch m;
  if (std::regex_search(s, m, answer_re) && pick(m[1].str()[0])) return c;
  if (std::regex_match(s, m, bare_re) && pick(m[1].str()[0])) return c;
  if (text::icontains(s, "don't know") || text::icontains(s, "do not know")) {
    c.parsed = true;
    c.idk = true;
  }
  return c;
}

McqResult mcq_judge(std::string_view question, const std::optional<ResultTable>& answer,
                    const std::vector<Mcq>& mcqs, llm::Gateway& judge, llm::CallLog* log) {
  McqResult r;
  for (const auto& mcq : mcqs) {
    McqVerdict v;
    if (answer) {
      const auto reply = judge.complete(render_judge_prompt(question, *answer, mcq), log, "judge");
      const auto choice = parse_judge_reply(reply.text, mcq);
      v.judged = true;
      v.selected = choice.option;
      v.idk = choice.idk;
      v.correct = choice.option && *choice.option == mcq.correct_index;
      if (!choice.parsed) v.warning = "unparseable judge reply: " + std::string(text::trim(reply.text));
    }
    r.correct += v.correct ? 1 : 0;
    r.verdicts.push_back(std::move(v));
  }
  r.accuracy = mcqs.empty() ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(mcqs.size());
  return r;
}

nlohmann::json to_json(const RecordScores& s) {
  return {{"em", s.em},
          {"cm", s.cm},
          {"ex", s.ex},
          {"ves", s.ves},
          {"mcq_correct", s.mcq_correct},
          {"mcq_total", s.mcq_total},
          {"status", sqlgen::to_string(s.status)},
          {"latency_ms", s.latency_ms}};
}

MetricsReport aggregate(const std::vector<RecordScores>& records) {
  if (records.empty()) throw std::invalid_argument("cannot aggregate an empty batch");
  MetricsReport r;
  r.records = records.size();
  for (auto st : {sqlgen::OutcomeStatus::answered, sqlgen::OutcomeStatus::exhausted, sqlgen::OutcomeStatus::failed}) {
    r.status_counts[std::string(sqlgen::to_string(st))] = 0;
  }
  std::size_t mcq_correct = 0;
  std::vector<double> latencies;
  for (const auto& s : records) {
    r.em += s.em ? 1.0 : 0.0;
    r.cm += s.cm;
    r.ex += s.ex ? 1.0 : 0.0;
    r.ves += s.ves;
    mcq_correct += s.mcq_correct;
    r.mcq_total += s.mcq_total;
    ++r.status_counts[std::string(sqlgen::to_string(s.status))];
    latencies.push_back(s.latency_ms);
  }
  const auto n = static_cast<double>(records.size());
  r.em /= n;
  r.cm /= n;
  r.ex /= n;
  r.ves /= n;
  if (r.mcq_total > 0) r.mcq_accuracy = static_cast<double>(mcq_correct) / static_cast<double>(r.mcq_total);
  std::sort(latencies.begin(), latencies.end());
  r.latency_p50_ms = nearest_rank(latencies, 0.50);
  r.latency_p90_ms = nearest_rank(latencies, 0.90);
  r.latency_max_ms = latencies.back();
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  return {{"records", r.records},
          {"em", r.em},
          {"cm", r.cm},
          {"ex", r.ex},
          {"ves", r.ves},
          {"mcq_accuracy", r.mcq_accuracy ? nlohmann::json(*r.mcq_accuracy) : nlohmann::json()},
          {"mcq_total", r.mcq_total},
          {"status_counts", r.status_counts},
          {"latency_ms", {{"p50", r.latency_p50_ms}, {"p90", r.latency_p90_ms}, {"max", r.latency_max_ms}}}};
}

std::string render_report(const MetricsReport& r) {
  std::string out = fmt::format("records        {}\n", r.records);
  out += fmt::format("EM             {:.4f}\n", r.em);
  out += fmt::format("CM             {:.4f}\n", r.cm);
  out += fmt::format("EX             {:.4f}\n", r.ex);
  out += fmt::format("VES            {:.4f}\n", r.ves);
  out += r.mcq_accuracy ? fmt::format("MCQ accuracy   {:.4f} ({} questions)\n", *r.mcq_accuracy, r.mcq_total)
                        : std::string("MCQ accuracy   n/a\n");
  out += fmt::format("answered       {}\nexhausted      {}\nfailed         {}\n", r.status_counts.at("answered"),
                     r.status_counts.at("exhausted"), r.status_counts.at("failed"));
  out += fmt::format("latency ms     p50 {:.1f}  p90 {:.1f}  max {:.1f}\n", r.latency_p50_ms, r.latency_p90_ms,
                     r.latency_max_ms);
  return out;
}

nlohmann::json to_json(const EvalRecordResult& r) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : r.mcq.verdicts) {
    verdicts.push_back({{"selected", v.selected ? nlohmann::json(*v.selected) : nlohmann::json()},
                        {"idk", v.idk},
                        {"correct", v.correct},
                        {"judged", v.judged},
                        {"warning", v.warning ? nlohmann::json(*v.warning) : nlohmann::json()}});
  }
  return {{"id", r.item.id},
          {"question", r.item.question},
          {"predicted_sql", r.predicted_sql ? nlohmann::json(*r.predicted_sql) : nlohmann::json()},
          {"scores", to_json(r.scores)},
          {"mcq_verdicts", verdicts},
          {"warnings", r.warnings},
          {"trace_id", r.prediction.trace.trace_id}};
}

EvalRecordResult evaluate_item(const EvalItem& item, const sqlgen::PipelineContext& context,
                               const sqlgen::PipelineConfig& config, llm::Gateway& judge,
                               const EvalOptions& options) {
  EvalRecordResult r;
  r.item = item;
  const auto& w = *context.warehouse;

  auto gold = w.execute_readonly(item.gold_sql, config.exec_limits);
  if (auto* t = std::get_if<ResultTable>(&gold)) {
    r.gold_table = std::move(*t);
  } else if (std::get<ExecError>(gold).kind == ExecErrorKind::empty) {
    r.warnings.push_back("gold SQL returns no rows");
  } else {
    throw std::invalid_argument("gold SQL for " + item.id + " fails: " + std::get<ExecError>(gold).message);
  }
  r.gold_table.ordered = has_top_level_order(item.gold_sql);

  const auto start = Clock::now();
  r.prediction = sqlgen::run_pipeline(item.question, context, config);
  r.scores.latency_ms = seconds_since(start) * 1000.0;
  r.scores.status = r.prediction.status;

  const auto& attempts = r.prediction.trace.attempts;
  if (!attempts.empty()) r.predicted_sql = attempts.back().sql;
  if (r.predicted_sql) {
    const auto em = exact_match(*r.predicted_sql, item.gold_sql);
    const auto cm = component_match(*r.predicted_sql, item.gold_sql);
    r.scores.em = em.match;
    r.scores.cm = cm.score;
    r.warnings.insert(r.warnings.end(), em.warnings.begin(), em.warnings.end());
  } else {
    r.warnings.push_back("no predicted SQL");
  }

  const bool answered = r.prediction.status == sqlgen::OutcomeStatus::answered;
  r.scores.ex = answered && execution_accuracy(r.prediction.final_table, r.gold_table);
  if (r.scores.ex) {
    const auto pred_time = time_sql(w, *attempts.back().executed_sql, config.exec_limits, options.timing_runs);
    const auto gold_time = time_sql(w, item.gold_sql, config.exec_limits, options.timing_runs);
    r.scores.ves = valid_efficiency_score(true, pred_time, gold_time);
  }

  r.mcq = mcq_judge(item.question, answered ? r.prediction.final_table : std::nullopt, item.mcqs, judge);
  r.scores.mcq_correct = r.mcq.correct;
  r.scores.mcq_total = item.mcqs.size();
  return r;
}

}  // namespace finstat::eval
