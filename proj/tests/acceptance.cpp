// Acceptance runner: one PASS/FAIL line per top-level criterion. Exit status is
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "finstat/core/prompts.hpp"
#include "finstat/eval/evaluation.hpp"
#include "finstat/eval/metrics.hpp"
#include "finstat/guard/parser.hpp"
#include "finstat/guard/validator.hpp"
#include "finstat/linker/entities.hpp"
#include "finstat/llm/scripted.hpp"
#include "finstat/service/server.hpp"
#include "finstat/store/fixtures.hpp"
#include "finstat/vec/index.hpp"
#include "sql_corpus.hpp"
#include "test_util.hpp"

using namespace finstat;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr const char* k_golden_question = "Banks with credit growth higher than average in Q3 2023";

class Criterion {
 public:
  explicit Criterion(std::string name) : name_(std::move(name)) {}

  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(std::string n) { notes_ = std::move(n); }
  bool passed() const { return failures_.empty(); }

  void report() const {
    std::cout << (passed() ? "PASS  " : "FAIL  ") << name_;
    if (!notes_.empty()) std::cout << " (" << notes_ << ")";
    if (!passed()) {
      std::cout << ": " << failures_.front();
      if (failures_.size() > 1) std::cout << " [+" << failures_.size() - 1 << " more]";
    }
    std::cout << std::endl;
  }

 private:
  std::string name_;
  std::string notes_;
  std::vector<std::string> failures_;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt_seconds(double s) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << s << " s";
  return out.str();
}

struct Env {
  std::shared_ptr<store::Warehouse> warehouse = store::seed_fixture(store::FixtureProfile::test());
  std::shared_ptr<vec::VectorIndex> index = std::make_shared<vec::VectorIndex>(std::make_shared<vec::HashingEmbedder>());
  std::shared_ptr<sqlgen::FewShotStore> shots;
  Env() {
    shots = std::make_shared<sqlgen::FewShotStore>(sqlgen::FewShotStore::shipped(warehouse->catalog()));
    service::build_index(*index, *warehouse, *shots);
  }
};

const Env& env() {
  static const Env e;
  return e;
}

std::shared_ptr<llm::Provider> script(const std::string& name) {
  return llm::ScriptedProvider::from_text(finstat::testing::read_test_file("data/scripts/" + name));
}

std::shared_ptr<llm::Gateway> gateway(std::shared_ptr<llm::Provider> p) {
  return std::make_shared<llm::Gateway>(std::move(p), llm::GatewayConfig{}, [](std::chrono::milliseconds) {});
}

std::string golden_sql() { return std::string(text::trim(finstat::testing::golden_query())); }

// ---- 1 ----

void golden_fixture(Criterion& c) {
  const auto& w = *env().warehouse;
  const auto start = Clock::now();
  const auto sql = golden_sql();
  const auto report = guard::check_sql(sql, w.catalog(), {});
  c.expect(report.verdict == guard::Verdict::rewritten, "guard verdict is not rewritten");
  const auto outcome = w.execute_readonly(report.effective_sql(sql));
  const double elapsed = seconds_since(start);
  c.note(fmt_seconds(elapsed));
  c.expect(elapsed < 1.0, "runtime " + fmt_seconds(elapsed));
  if (!std::holds_alternative<ResultTable>(outcome)) {
    c.expect(false, "query did not return a table");
    return;
  }
  const auto& t = std::get<ResultTable>(outcome);
  const auto row_text = [&](std::size_t i) {
    std::string s;
    for (const auto& cell : t.rows[i]) s += (s.empty() ? "" : ",") + cell_to_string(cell);
    return s;
  };
  c.expect(!t.rows.empty() && row_text(0) == "HDB,2023,3,0.64,0.24",
           "first row is " + (t.rows.empty() ? std::string("missing") : row_text(0)));
  for (const auto& [code, value] : std::vector<std::pair<std::string, std::string>>{
           {"VPB", "0.52"}, {"MSB", "0.35"}, {"KLB", "0.34"}}) {
    const bool found = std::any_of(t.rows.begin(), t.rows.end(), [&](const auto& r) {
      return cell_to_string(r[0]) == code && cell_to_string(r[3]) == value;
    });
    c.expect(found, code + " " + value + " missing");
  }
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    c.expect(std::get<double>(t.rows[i - 1][3]) >= std::get<double>(t.rows[i][3]), "rows not descending");
  }
}

// ---- 2 ----

void prompt_fidelity(Criterion& c) {
  constexpr std::string_view task = "Net Income YoY and ROE 4 nearest quarter of HPG in 2023";
  const auto hashes = finstat::testing::golden_hashes();
  const auto entity = linker::render_entity_prompt(task);
  c.expect(entity.user_turns.size() == 1 && text::sha256_hex(entity.user_turns[0]) == hashes.at("entity_extraction"),
           "entity extraction prompt hash differs");
  c.expect(text::sha256_hex(prompts::render_schema()) == hashes.at("schema_description"),
           "schema description prompt hash differs");
  c.expect(text::sha256_hex(prompts::render_correction(finstat::testing::read_test_file(
               "golden/correction_sample_result.txt"))) == hashes.at("self_correction"),
           "self-correction prompt hash differs");

  const auto reply = finstat::testing::read_test_file("data/b1_example_reply.txt");
  llm::Gateway g(llm::ScriptedProvider::from_text("@rule contains " + std::string(task) + "\n@response\n" + reply +
                                                  "\n@end\n"));
  const auto parsed = linker::parse_entity_reply(g.complete(entity).text);
  linker::ExtractedEntities want;
  want.company_name = {"HPG"};
  want.financial_statement_account = {"Net Income"};
  want.financial_ratio = {"Net Income YoY", "ROE 4 nearest quarter"};
  c.expect(parsed.entities == want, "example reply parsed to " + linker::to_json(parsed.entities).dump());
  c.expect(parsed.warnings.empty(), "example reply produced warnings");
}

// ---- 3 ----

struct Served {
  int status = 0;
  json body;
  double seconds = 0;
};

Served ask_over_http(std::shared_ptr<llm::Provider> provider, const sqlgen::PipelineConfig& config = {}) {
  service::Components comp;
  comp.warehouse = env().warehouse;
  comp.index = env().index;
  comp.fewshots = env().shots;
  comp.gateway = gateway(std::move(provider));
  comp.pipeline = config;
  service::ServerSettings settings;
  settings.port = 0;
  settings.trace_dir = "";
  service::ApiServer server(comp, settings);
  httplib::Client client("127.0.0.1", server.start());
  client.set_read_timeout(30, 0);

  Served out;
  const auto start = Clock::now();
  const auto res = client.Post("/api/ask", json{{"question", k_golden_question}, {"options", {{"trace", true}}}}.dump(),
                               "application/json");
  out.seconds = seconds_since(start);
  if (res) {
    out.status = res->status;
    out.body = json::parse(res->body, nullptr, false);
  }
  server.stop();
  return out;
}

void end_to_end(Criterion& c) {
  double slowest = 0;
  const auto check_time = [&](const Served& s, const std::string& name) {
    slowest = std::max(slowest, s.seconds);
    c.expect(s.seconds < 5.0, name + " took " + fmt_seconds(s.seconds));
  };

  const auto golden = ask_over_http(script("golden.script"));
  check_time(golden, "golden");
  c.expect(golden.status == 200 && golden.body.value("status", "") == "answered", "golden run not answered");
  if (golden.status == 200) {
    const auto fixture = std::get<ResultTable>(
        env().warehouse->execute_readonly(guard::check_sql(golden_sql(), env().warehouse->catalog(), {})
                                              .effective_sql(golden_sql())));
    const auto want = to_json(fixture);
    c.expect(golden.body["columns"] == want["columns"] && golden.body["rows"] == want["rows"],
             "golden run table differs from the fixture table");
  }

  const auto fixed = ask_over_http(script("broken_then_fixed.script"));
  check_time(fixed, "broken-then-fixed");
  c.expect(fixed.body.value("status", "") == "answered", "broken-then-fixed not answered");
  c.expect(fixed.body.contains("trace") && fixed.body["trace"]["attempts"].size() == 2,
           "broken-then-fixed did not take exactly 2 attempts");

  for (std::size_t budget : {0u, 1u, 3u}) {
    sqlgen::PipelineConfig config;
    config.max_iterations = budget;
    const auto no = ask_over_http(script("always_no.script"), config);
    check_time(no, "always-no");
    c.expect(no.body.value("status", "") == "exhausted", "always-no not exhausted at budget " + std::to_string(budget));
    c.expect(no.body.contains("trace") && no.body["trace"]["attempts"].size() == 1 + budget,
             "always-no attempts != 1 + " + std::to_string(budget));
  }
  c.note("slowest " + fmt_seconds(slowest));
}

// ---- 4 ----

void guard_suite(Criterion& c) {
  const auto& catalog = env().warehouse->catalog();
  const guard::QueryPolicy policy;

  finstat::testing::SelectGenerator mutants_from(99);
  std::size_t cases = 0, rejected = 0;
  for (const auto& seed : mutants_from.batch(40)) {
    for (const auto& m : finstat::testing::reject_mutations(seed)) {
      ++cases;
      if (guard::check_sql(m, catalog, policy).verdict == guard::Verdict::reject) ++rejected;
      else c.expect(false, "mutant admitted: " + m);
    }
  }
  c.expect(cases >= 200, "mutation corpus has only " + std::to_string(cases) + " cases");

  const auto golden = golden_sql();
  const auto g = guard::check_sql(golden, catalog, policy);
  c.expect(g.verdict == guard::Verdict::rewritten && g.rewritten_sql &&
               g.rewritten_sql->ends_with("LIMIT " + std::to_string(policy.max_limit)),
           "golden query not rewritten with an appended LIMIT");
  c.expect(guard::has_quarter_condition(guard::parse_single_query(golden)), "quarter rule: golden query not positive");
  const auto neg = guard::check_sql("SELECT data FROM financial_ratio LIMIT 10", catalog, policy);
  c.expect(neg.verdict == guard::Verdict::reject &&
               std::any_of(neg.violations.begin(), neg.violations.end(),
                           [](const auto& v) { return v.rule == "quarter_condition"; }),
           "quarter rule: constructed query not rejected");

  finstat::testing::SelectGenerator corpus_from(11);
  auto corpus = corpus_from.batch(400);
  corpus.push_back(golden);
  std::size_t idempotent = 0;
  for (const auto& sql : corpus) {
    const auto first = guard::check_sql(sql, catalog, policy);
    if (!first.admitted()) {
      c.expect(false, "generated query rejected: " + sql);
      continue;
    }
    const auto once = first.effective_sql(sql);
    const auto second = guard::check_sql(once, catalog, policy);
    if (second.admitted() && second.effective_sql(once) == once) ++idempotent;
    else c.expect(false, "rewrite not idempotent: " + sql);
  }
  c.note(std::to_string(rejected) + "/" + std::to_string(cases) + " mutants rejected, " + std::to_string(idempotent) +
         "/" + std::to_string(corpus.size()) + " idempotent");
}

// ---- 5 ----

void vector_oracle(Criterion& c) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr std::size_t dim = 32;
  const auto random_vector = [&] {
    vec::Vector v(dim);
    for (auto& x : v) x = normal(rng);
    return v;
  };

  std::vector<std::pair<std::string, vec::Vector>> entries;
  vec::VectorIndex index(std::make_shared<vec::HashingEmbedder>());
  for (std::size_t i = 0; i < 1000; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "n%04zu", (i * 613) % 1000);
    entries.emplace_back(id, i >= 990 ? entries[i - 990].second : random_vector());
    index.upsert({vec::Namespace::fewshot, id, id, entries.back().second, {}});
  }

  const auto cosine = [](const vec::Vector& a, const vec::Vector& b) {
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += static_cast<long double>(a[i]) * b[i];
      na += static_cast<long double>(a[i]) * a[i];
      nb += static_cast<long double>(b[i]) * b[i];
    }
    return static_cast<double>(dot / std::sqrt(na * nb));
  };

  constexpr int trials = 200;
  std::size_t mismatches = 0;
  for (int t = 0; t < trials; ++t) {
    const auto q = t % 4 == 0 ? entries[static_cast<std::size_t>(t) % 10].second : random_vector();
    const std::size_t k = 1 + rng() % 50;
    std::vector<std::pair<double, std::string>> all;
    for (const auto& [id, v] : entries) all.emplace_back(cosine(q, v), id);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      if (std::abs(a.first - b.first) > 1e-12) return a.first > b.first;
      return a.second < b.second;
    });
    const auto got = index.search_vector(vec::Namespace::fewshot, q, k);
    if (got.size() != k) {
      ++mismatches;
      continue;
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (got[i].id != all[i].second || std::abs(got[i].score - all[i].first) > 1e-9) ++mismatches;
    }
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " mismatches");
  c.note(std::to_string(trials) + " trials over 1000 entries, " + std::to_string(mismatches) + " mismatches");
}

// ---- 6 ----

void metric_correctness(Criterion& c) {
  using namespace eval;
  const auto golden = golden_sql();
  auto flipped = golden;
  flipped.replace(flipped.rfind("DESC"), 4, "ASC");

  c.expect(exact_match("select  1", "SELECT 1;").match, "EM normalization");
  c.expect(exact_match(golden, golden).match, "EM reflexive");
  c.expect(!exact_match(flipped, golden).match, "EM order direction");

  const std::string six =
      "SELECT ci.industry, AVG(fr.data) AS avg_roe FROM financial_ratio fr JOIN company_info ci "
      "ON fr.stock_code = ci.stock_code WHERE fr.ratio_code = 'ROE' AND fr.quarter = 0 "
      "GROUP BY ci.industry ORDER BY avg_roe DESC LIMIT 5";
  auto six_limit = six;
  six_limit.replace(six_limit.find("LIMIT 5"), 7, "LIMIT 10");
  c.expect(component_match(six, six).score == 1.0, "CM identical");
  c.expect(std::abs(component_match(six_limit, six).score - 5.0 / 6.0) < 1e-12, "CM LIMIT-only pair != 5/6");
  c.expect(component_match("SELECT industry FROM company_info WHERE is_bank = TRUE LIMIT 3",
                           "SELECT data FROM financial_ratio WHERE quarter = 0 LIMIT 5")
                   .score == 0.0,
           "CM disjoint");

  auto gold = std::get<ResultTable>(env().warehouse->execute_readonly(golden));
  gold.ordered = has_top_level_order(golden);
  auto shuffled = gold;
  std::reverse(shuffled.rows.begin(), shuffled.rows.end());
  auto unordered = gold;
  unordered.ordered = false;
  c.expect(execution_accuracy(shuffled, unordered), "EX shuffled rows");
  auto off = gold;
  off.rows[0][3] = 0.63;
  c.expect(!execution_accuracy(off, gold), "EX HDB 0.63 accepted");
  auto extra = gold;
  extra.rows.push_back(extra.rows.back());
  c.expect(!execution_accuracy(extra, gold), "EX extra row accepted");

  c.expect(valid_efficiency_score(true, 0.2, 0.2) == 1.0, "VES equal times");
  c.expect(valid_efficiency_score(false, 0.2, 0.7) == 0.0, "VES without EX");
  c.expect(std::abs(valid_efficiency_score(true, 4 * 0.2, 0.2) - 0.5) < 1e-12, "VES 4t vs t");

  using S = sqlgen::OutcomeStatus;
  const std::vector<RecordScores> records{
      {true, 1.0, true, 1.0, 3, 3, S::answered, 100},       {false, 0.5, true, 0.5, 2, 4, S::answered, 200},
      {true, 1.0, false, 0.0, 0, 2, S::exhausted, 300},     {false, 0.25, false, 0.0, 0, 1, S::failed, 50},
      {true, 5.0 / 6.0, true, 2.0, 1, 1, S::answered, 400}, {false, 0.0, false, 0.0, 0, 5, S::exhausted, 150},
      {true, 0.75, true, 0.8, 4, 5, S::answered, 250},      {false, 1.0 / 3.0, false, 0.0, 1, 3, S::answered, 120},
      {true, 1.0, true, 1.25, 2, 2, S::answered, 90},       {true, 0.6, true, 0.9, 1, 4, S::answered, 500},
  };
  const auto r = aggregate(records);
  double em = 0, cm = 0, ex = 0, ves = 0, mc = 0, mt = 0;
  for (const auto& s : records) {
    em += s.em;
    cm += s.cm;
    ex += s.ex;
    ves += s.ves;
    mc += static_cast<double>(s.mcq_correct);
    mt += static_cast<double>(s.mcq_total);
  }
  const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
  c.expect(near(r.em, em / 10) && near(r.cm, cm / 10) && near(r.ex, ex / 10) && near(r.ves, ves / 10) &&
               r.mcq_accuracy && near(*r.mcq_accuracy, mc / mt),
           "aggregate differs from recomputation");

  const std::vector<Mcq> mcqs{{"Q-one", {"a", "b", "c", "d"}, 0, false},
                              {"Q-two", {"a", "b"}, 1, true},
                              {"Q-three", {"a", "b", "c"}, 2, false},
                              {"Q-four", {"a", "b", "c", "d", "e"}, 4, true}};
  llm::Gateway right(llm::ScriptedProvider::from_text(
      "@rule contains Q-one\n@response\nAnswer: A\n@end\n@rule contains Q-two\n@response\nAnswer: B\n@end\n"
      "@rule contains Q-three\n@response\nAnswer: C\n@end\n@rule contains Q-four\n@response\nAnswer: E\n@end\n"));
  c.expect(mcq_judge(k_golden_question, gold, mcqs, right).accuracy == 1.0, "MCQ always-correct != 1.0");
  llm::Gateway idk(llm::ScriptedProvider::from_text(
      "@rule contains Q-two\n@response\nAnswer: C\n@end\n@rule contains Q-four\n@response\nAnswer: F\n@end\n"
      "@rule regex .\n@response\nI don't know.\n@end\n"));
  c.expect(mcq_judge(k_golden_question, gold, mcqs, idk).accuracy == 0.0, "MCQ IDK scored correct");
  llm::CallLog log;
  const auto unanswered = mcq_judge(k_golden_question, std::nullopt, {mcqs[0], mcqs[1], mcqs[2]}, right, &log);
  c.expect(unanswered.accuracy == 0.0 && log.size() == 0, "MCQ unanswered called the judge or scored");
}

// ---- 7 ----

void determinism(Criterion& c) {
  std::size_t runs = 0;
  for (const char* name : {"golden.script", "broken_then_fixed.script", "always_no.script", "multistep.script"}) {
    for (bool multistep : {false, true}) {
      sqlgen::PipelineConfig config;
      config.multistep = multistep;
      const auto run = [&] {
        const sqlgen::PipelineContext ctx{env().warehouse, env().index, env().shots, gateway(script(name))};
        return sqlgen::canonical_trace(sqlgen::run_pipeline(k_golden_question, ctx, config));
      };
      const auto first = run();
      const auto second = run();
      ++runs;
      c.expect(first == second, std::string(name) + (multistep ? " (multistep)" : "") + " trace differs");
      c.expect(first.find("created_at") == std::string::npos, "canonical trace carries created_at");
    }
  }
  c.note(std::to_string(runs) + " scripted runs repeated");
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria{
      {"golden-query fixture", golden_fixture},
      {"prompt fidelity", prompt_fidelity},
      {"end-to-end scripted runs via /api/ask", end_to_end},
      {"guard suite", guard_suite},
      {"vector oracle", vector_oracle},
      {"metric correctness", metric_correctness},
      {"determinism", determinism},
  };
  env();
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Criterion c(name);
    try {
      run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    c.report();
    failed += c.passed() ? 0 : 1;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
