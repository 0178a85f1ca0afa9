#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "finstat/eval/evaluation.hpp"
#include "finstat/eval/metrics.hpp"
#include "finstat/guard/parser.hpp"
#include "finstat/llm/scripted.hpp"
#include "finstat/store/fixtures.hpp"
#include "finstat/vec/warehouse_index.hpp"
#include "sql_corpus.hpp"
#include "test_util.hpp"

using namespace finstat;
using namespace finstat::eval;

namespace {

const std::string& golden() {
  static const std::string g(text::trim(finstat::testing::golden_query()));
  return g;
}

std::string flip_order(std::string sql) {
  const auto pos = sql.rfind("DESC");
  return sql.replace(pos, 4, "ASC");
}

// ---- EM ----

TEST(ExactMatch, NormalizesCaseSpaceAndSemicolon) {
  EXPECT_TRUE(exact_match("select  1", "SELECT 1;").match);
  EXPECT_TRUE(exact_match("SELECT Stock_Code FROM Financial_Ratio WHERE quarter = 0 LIMIT 5",
                          "select stock_code\nfrom financial_ratio where QUARTER=0 limit 5")
                  .match);
  EXPECT_FALSE(exact_match("SELECT 'HDB'", "SELECT 'hdb'").match);
}

TEST(ExactMatch, GoldenReflexiveAndOrderSensitive) {
  EXPECT_TRUE(exact_match(golden(), golden()).match);
  EXPECT_FALSE(exact_match(flip_order(golden()), golden()).match);
}

TEST(ExactMatch, UnparseableIsFalseWithWarning) {
  const auto r = exact_match("SELEC 1", "SELECT 1");
  EXPECT_FALSE(r.match);
  EXPECT_EQ(r.warnings.size(), 1u);
  EXPECT_FALSE(exact_match("SELECT 1; SELECT 2", "SELECT 1").match);
}

TEST(ExactMatch, SymmetricAndImpliesFullComponentMatch) {
  finstat::testing::SelectGenerator gen(11);
  const auto corpus = gen.batch(120);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& a = corpus[i];
    const auto& b = corpus[(i * 7 + 3) % corpus.size()];
    EXPECT_TRUE(exact_match(a, a).match) << a;
    EXPECT_EQ(exact_match(a, b).match, exact_match(b, a).match);
    if (exact_match(a, b).match) {
      EXPECT_DOUBLE_EQ(component_match(a, b).score, 1.0);
    }
    EXPECT_DOUBLE_EQ(component_match(a, a).score, 1.0) << a;
  }
}

// ---- CM ----

constexpr std::string_view k_six_clauses =
    "SELECT ci.industry, AVG(fr.data) AS avg_roe FROM financial_ratio fr JOIN company_info ci "
    "ON fr.stock_code = ci.stock_code WHERE fr.ratio_code = 'ROE' AND fr.quarter = 0 "
    "GROUP BY ci.industry ORDER BY avg_roe DESC LIMIT 5";

std::string replace_once(std::string s, std::string_view from, std::string_view to) {
  return s.replace(s.find(from), from.size(), to);
}

TEST(ComponentMatch, Identical) { EXPECT_DOUBLE_EQ(component_match(golden(), golden()).score, 1.0); }

TEST(ComponentMatch, OnlyLimitDiffers) {
  const std::string gold(k_six_clauses);
  const auto pred = replace_once(gold, "LIMIT 5", "LIMIT 10");
  const auto r = component_match(pred, gold);
  EXPECT_EQ(r.counted, 6u);
  EXPECT_EQ(r.matched, 5u);
  EXPECT_DOUBLE_EQ(r.score, 5.0 / 6.0);
}

TEST(ComponentMatch, HandCountedPairs) {
  const std::string gold(k_six_clauses);
  // WHERE and ORDER BY differ: 4 of 6.
  auto pred = replace_once(replace_once(gold, "fr.quarter = 0", "fr.quarter = 4"), "DESC", "ASC");
  EXPECT_DOUBLE_EQ(component_match(pred, gold).score, 4.0 / 6.0);
  // Conjunct order is irrelevant.
  pred = replace_once(gold, "fr.ratio_code = 'ROE' AND fr.quarter = 0", "fr.quarter = 0 AND fr.ratio_code = 'ROE'");
  EXPECT_DOUBLE_EQ(component_match(pred, gold).score, 1.0);
  EXPECT_FALSE(exact_match(pred, gold).match);
  // Gold without GROUP BY / ORDER BY counts four kinds; WHERE differs: 3 of 4.
  const auto r = component_match("SELECT stock_code FROM financial_ratio WHERE quarter = 1 LIMIT 5",
                                 "SELECT stock_code FROM financial_ratio WHERE quarter = 0 LIMIT 5");
  EXPECT_EQ(r.counted, 4u);
  EXPECT_DOUBLE_EQ(r.score, 0.75);
}

TEST(ComponentMatch, Disjoint) {
  EXPECT_DOUBLE_EQ(component_match("SELECT industry FROM company_info WHERE is_bank = TRUE LIMIT 3",
                                   "SELECT data FROM financial_ratio WHERE quarter = 0 LIMIT 5")
                       .score,
                   0.0);
}

TEST(ComponentMatch, UnparseableIsZero) {
  const auto r = component_match("DELETE FROM x", golden());
  EXPECT_DOUBLE_EQ(r.score, 0.0);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(ComponentMatch, CollectsCtesAndSubqueries) {
  const auto q = guard::parse_single_query(golden());
  const auto sets = clause_sets(q);
  EXPECT_EQ(sets.at(Clause::from),
            (std::set<std::string>{"financial_ratio", "company_info", "industry_financial_ratio", "bank_credit_growth",
                                   "industry_avg_growth"}));
  EXPECT_TRUE(sets.at(Clause::where).count("fr.ratio_code = 'CDGYoY'"));
  EXPECT_TRUE(sets.at(Clause::limit).empty());
  EXPECT_EQ(sets.at(Clause::order_by), std::set<std::string>{"b.credit_growth_yoy desc"});
}

// ---- EX ----

ResultTable golden_table() {
  static const auto warehouse = store::seed_fixture(store::FixtureProfile::test());
  auto t = std::get<ResultTable>(warehouse->execute_readonly(golden()));
  t.ordered = has_top_level_order(golden());
  return t;
}

TEST(ExecutionAccuracy, ShuffledRowsWithoutOrdering) {
  auto gold = golden_table();
  gold.ordered = false;
  auto pred = gold;
  std::reverse(pred.rows.begin(), pred.rows.end());
  EXPECT_TRUE(execution_accuracy(pred, gold));
  EXPECT_TRUE(execution_accuracy(gold, pred));
  gold.ordered = true;
  EXPECT_FALSE(execution_accuracy(pred, gold));
}

TEST(ExecutionAccuracy, ValueOffByOneHundredthFails) {
  const auto gold = golden_table();
  ASSERT_TRUE(gold.ordered);
  auto pred = gold;
  ASSERT_EQ(pred.rows[0][0], Cell{std::string("HDB")});
  ASSERT_EQ(pred.rows[0][3], Cell{0.64});
  pred.rows[0][3] = 0.63;
  EXPECT_FALSE(execution_accuracy(pred, gold));
  pred.rows[0][3] = 0.64 * (1 + 1e-9);
  EXPECT_TRUE(execution_accuracy(pred, gold));
}

TEST(ExecutionAccuracy, ExtraOrMissingRowFails) {
  const auto gold = golden_table();
  auto pred = gold;
  pred.rows.push_back(pred.rows.back());
  EXPECT_FALSE(execution_accuracy(pred, gold));
  pred = gold;
  pred.rows.pop_back();
  EXPECT_FALSE(execution_accuracy(pred, gold));
  EXPECT_FALSE(execution_accuracy(std::nullopt, gold));
}

TEST(ExecutionAccuracy, ColumnsByNameThenByPosition) {
  ResultTable gold{{"a", "b"}, {{std::int64_t{1}, std::string("x")}, {std::int64_t{2}, std::string("y")}}, false,
                   false};
  ResultTable by_name{{"B", "A"}, {{std::string("x"), 1.0}, {std::string("y"), std::int64_t{2}}}, false, false};
  EXPECT_TRUE(execution_accuracy(by_name, gold));
  ResultTable by_pos{{"k", "v"}, {{std::int64_t{2}, std::string("y")}, {std::int64_t{1}, std::string("x")}}, false,
                     false};
  EXPECT_TRUE(execution_accuracy(by_pos, gold));
  ResultTable swapped{{"k", "v"}, {{std::string("x"), std::int64_t{1}}, {std::string("y"), std::int64_t{2}}}, false,
                      false};
  EXPECT_FALSE(execution_accuracy(swapped, gold));
  EXPECT_TRUE(execution_accuracy(gold, gold));
}

TEST(ExecutionAccuracy, MultisetCountsDuplicates) {
  ResultTable gold{{"a"}, {{std::int64_t{1}}, {std::int64_t{1}}, {std::int64_t{2}}}, false, false};
  ResultTable pred{{"a"}, {{std::int64_t{1}}, {std::int64_t{2}}, {std::int64_t{2}}}, false, false};
  EXPECT_FALSE(execution_accuracy(pred, gold));
}

TEST(ExecutionAccuracy, CellTolerance) {
  EXPECT_TRUE(cells_equal(std::int64_t{3}, 3.0));
  EXPECT_TRUE(cells_equal(1e12, 1e12 + 1));
  EXPECT_FALSE(cells_equal(1.0, 1.00001));
  EXPECT_TRUE(cells_equal(Cell{}, Cell{}));
  EXPECT_FALSE(cells_equal(Cell{}, std::int64_t{0}));
  EXPECT_FALSE(cells_equal(std::string("1"), std::int64_t{1}));
}

// ---- VES ----

TEST(Ves, Examples) {
  EXPECT_DOUBLE_EQ(valid_efficiency_score(true, 0.3, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(valid_efficiency_score(false, 0.1, 7.0), 0.0);
  EXPECT_DOUBLE_EQ(valid_efficiency_score(true, 4 * 0.25, 0.25), 0.5);
  EXPECT_THROW(valid_efficiency_score(true, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(valid_efficiency_score(true, 1.0, -1.0), std::invalid_argument);
}

TEST(Ves, EqualTimesAndMonotone) {
  double prev = 1e9;
  for (double t = 0.001; t < 10; t *= 1.7) {
    EXPECT_NEAR(valid_efficiency_score(true, t, t), 1.0, 1e-12);
    const double v = valid_efficiency_score(true, t, 1.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

// ---- MCQ judge ----

std::unique_ptr<llm::Gateway> judge_gateway(std::string_view script) {
  return std::make_unique<llm::Gateway>(llm::ScriptedProvider::from_text(script));
}

std::vector<Mcq> four_mcqs() {
  return {{"Q-one", {"a", "b", "c", "d"}, 0, false},
          {"Q-two", {"a", "b"}, 1, true},
          {"Q-three", {"a", "b", "c"}, 2, false},
          {"Q-four", {"a", "b", "c", "d", "e"}, 4, true}};
}

TEST(McqJudge, AlwaysCorrect) {
  auto judge = judge_gateway(
      "@rule contains Q-one\n@response\nAnswer: A\n@end\n"
      "@rule contains Q-two\n@response\nAnswer: (B)\n@end\n"
      "@rule contains Q-three\n@response\nC\n@end\n"
      "@rule contains Q-four\n@response\n**Answer:** E\n@end\n");
  const auto r = mcq_judge("q", golden_table(), four_mcqs(), *judge);
  EXPECT_EQ(r.correct, 4u);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
}

TEST(McqJudge, IdkIsIncorrect) {
  // Q-two offers C as "I don't know"; Q-four offers F.
  auto judge = judge_gateway(
      "@rule contains Q-two\n@response\nAnswer: C\n@end\n"
      "@rule contains Q-four\n@response\nAnswer: F\n@end\n"
      "@rule regex .\n@response\nI don't know.\n@end\n");
  const auto r = mcq_judge("q", golden_table(), four_mcqs(), *judge);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.0);
  for (const auto& v : r.verdicts) {
    EXPECT_TRUE(v.idk);
    EXPECT_FALSE(v.correct);
    EXPECT_FALSE(v.warning);
  }
}

TEST(McqJudge, UnansweredSkipsTheJudge) {
  auto judge = judge_gateway("@rule regex .\n@response\nAnswer: A\n@end\n");
  llm::CallLog log;
  const auto mcqs = four_mcqs();
  const auto r = mcq_judge("q", std::nullopt, {mcqs[0], mcqs[1], mcqs[2]}, *judge, &log);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.0);
  EXPECT_EQ(r.verdicts.size(), 3u);
  EXPECT_EQ(log.size(), 0u);
}

TEST(McqJudge, UnparseableAndOutOfRangeAreIncorrect) {
  auto judge = judge_gateway(
      "@rule contains Q-one\n@response\nthe first one probably\n@end\n"
      "@rule contains Q-three\n@response\nAnswer: D\n@end\n");
  const auto mcqs = four_mcqs();
  const auto r = mcq_judge("q", golden_table(), {mcqs[0], mcqs[2]}, *judge);
  EXPECT_EQ(r.correct, 0u);
  EXPECT_TRUE(r.verdicts[0].warning);
  EXPECT_TRUE(r.verdicts[1].warning);
}

TEST(McqJudge, VerdictsAreIndependent) {
  const std::string script =
      "@rule contains Q-one\n@response\nAnswer: A\n@end\n"
      "@rule contains Q-two\n@response\nAnswer: A\n@end\n"
      "@rule contains Q-three\n@response\nAnswer: C\n@end\n"
      "@rule contains Q-four\n@response\nAnswer: E\n@end\n";
  const auto mcqs = four_mcqs();
  const auto all = mcq_judge("q", golden_table(), mcqs, *judge_gateway(script));
  for (std::size_t drop = 0; drop < mcqs.size(); ++drop) {
    auto subset = mcqs;
    subset.erase(subset.begin() + static_cast<std::ptrdiff_t>(drop));
    const auto part = mcq_judge("q", golden_table(), subset, *judge_gateway(script));
    for (std::size_t i = 0, j = 0; i < mcqs.size(); ++i) {
      if (i == drop) continue;
      EXPECT_EQ(part.verdicts[j++].correct, all.verdicts[i].correct);
    }
  }
}

TEST(McqJudge, PromptListsOptionsAndIdk) {
  const auto mcqs = four_mcqs();
  const auto b = render_judge_prompt("Banks?", golden_table(), mcqs[1]);
  const auto& u = b.user_turns.at(0);
  EXPECT_NE(u.find("<question>\nBanks?\n</question>"), std::string::npos);
  EXPECT_NE(u.find("HDB"), std::string::npos);
  EXPECT_NE(u.find("A. a\nB. b\nC. I don't know\n"), std::string::npos);
  EXPECT_EQ(render_judge_prompt("Banks?", golden_table(), mcqs[0]).user_turns[0].find("I don't know"),
            std::string::npos);
}

// ---- aggregate ----

TEST(Aggregate, SingleAndPair) {
  RecordScores yes;
  yes.ex = true;
  EXPECT_DOUBLE_EQ(aggregate({yes}).ex, 1.0);
  RecordScores no;
  EXPECT_DOUBLE_EQ(aggregate({yes, no}).ex, 0.5);
  EXPECT_THROW(aggregate({}), std::invalid_argument);
  EXPECT_FALSE(aggregate({yes}).mcq_accuracy);
}

TEST(Aggregate, TenCraftedRecords) {
  using S = sqlgen::OutcomeStatus;
  const std::vector<RecordScores> records{
      {true, 1.0, true, 1.0, 3, 3, S::answered, 100},          {false, 0.5, true, 0.5, 2, 4, S::answered, 200},
      {true, 1.0, false, 0.0, 0, 2, S::exhausted, 300},        {false, 0.25, false, 0.0, 0, 1, S::failed, 50},
      {true, 5.0 / 6.0, true, 2.0, 1, 1, S::answered, 400},    {false, 0.0, false, 0.0, 0, 5, S::exhausted, 150},
      {true, 0.75, true, 0.8, 4, 5, S::answered, 250},         {false, 1.0 / 3.0, false, 0.0, 1, 3, S::answered, 120},
      {true, 1.0, true, 1.25, 2, 2, S::answered, 90},          {true, 0.6, true, 0.9, 1, 4, S::answered, 500},
  };
  const auto r = aggregate(records);
  // Hand-computed: EM 6/10, CM 6.26667/10, EX 6/10, VES 6.45/10, MCQ 14/30 pooled.
  EXPECT_NEAR(r.em, 0.6, 1e-9);
  EXPECT_NEAR(r.cm, 0.6266666666666667, 1e-9);
  EXPECT_NEAR(r.ex, 0.6, 1e-9);
  EXPECT_NEAR(r.ves, 0.645, 1e-9);
  ASSERT_TRUE(r.mcq_accuracy);
  EXPECT_NEAR(*r.mcq_accuracy, 14.0 / 30.0, 1e-9);
  EXPECT_EQ(r.mcq_total, 30u);
  EXPECT_EQ(r.status_counts.at("answered"), 7u);
  EXPECT_EQ(r.status_counts.at("exhausted"), 2u);
  EXPECT_EQ(r.status_counts.at("failed"), 1u);
  EXPECT_DOUBLE_EQ(r.latency_p50_ms, 150);
  EXPECT_DOUBLE_EQ(r.latency_p90_ms, 400);
  EXPECT_DOUBLE_EQ(r.latency_max_ms, 500);

  // Independent recomputation of the same means.
  double em = 0, cm = 0, ex = 0, ves = 0, mc = 0, mt = 0;
  for (const auto& s : records) {
    em += s.em;
    cm += s.cm;
    ex += s.ex;
    ves += s.ves;
    mc += static_cast<double>(s.mcq_correct);
    mt += static_cast<double>(s.mcq_total);
  }
  EXPECT_NEAR(r.em, em / 10, 1e-9);
  EXPECT_NEAR(r.cm, cm / 10, 1e-9);
  EXPECT_NEAR(r.ex, ex / 10, 1e-9);
  EXPECT_NEAR(r.ves, ves / 10, 1e-9);
  EXPECT_NEAR(*r.mcq_accuracy, mc / mt, 1e-9);
  const auto j = to_json(r);
  EXPECT_EQ(j["records"], 10);
  EXPECT_NE(render_report(r).find("EX             0.6000"), std::string::npos);
}

// ---- batch file and end-to-end record ----

TEST(EvalBatch, ParsesAndValidates) {
  const auto items = parse_eval_jsonl(finstat::testing::read_test_file("data/eval/golden.jsonl"));
  ASSERT_EQ(items.size(), 1u);
  EXPECT_EQ(items[0].mcqs.size(), 3u);
  EXPECT_TRUE(items[0].mcqs[2].allow_idk);
  EXPECT_THROW(parse_eval_jsonl(R"({"question":"q","gold_sql":"SELECT 1","mcqs":[]})"), std::invalid_argument);
  EXPECT_THROW(parse_eval_jsonl(R"({"question":"q","gold_sql":"SELECT 1","mcqs":[{"stem":"s","options":["a"],"correct_index":0}]})"),
               std::invalid_argument);
  EXPECT_THROW(parse_eval_jsonl(R"({"question":"q","gold_sql":"SELECT 1","mcqs":[{"stem":"s","options":["a","b"],"correct_index":2}]})"),
               std::invalid_argument);
}

TEST(EvalBatch, GoldenRecordEndToEnd) {
  const auto warehouse = store::seed_fixture(store::FixtureProfile::test());
  auto index = std::make_shared<vec::VectorIndex>(std::make_shared<vec::HashingEmbedder>());
  vec::index_warehouse(*index, *warehouse, store::AccountMapping::shipped());
  auto shots = std::make_shared<sqlgen::FewShotStore>(sqlgen::FewShotStore::shipped(warehouse->catalog()));
  shots->index_into(*index);
  const auto script = finstat::testing::read_test_file("data/scripts/golden.script");
  sqlgen::PipelineContext ctx{warehouse, index, shots,
                              std::make_shared<llm::Gateway>(llm::ScriptedProvider::from_text(script))};
  llm::Gateway judge(llm::ScriptedProvider::from_text(finstat::testing::read_test_file("data/scripts/judge.script")));

  const auto item = parse_eval_jsonl(finstat::testing::read_test_file("data/eval/golden.jsonl")).at(0);
  const auto r = evaluate_item(item, ctx, {}, judge);
  EXPECT_EQ(r.scores.status, sqlgen::OutcomeStatus::answered);
  EXPECT_TRUE(r.scores.em);
  EXPECT_DOUBLE_EQ(r.scores.cm, 1.0);
  EXPECT_TRUE(r.scores.ex);
  EXPECT_GT(r.scores.ves, 0.0);
  EXPECT_EQ(r.scores.mcq_correct, 3u);
  EXPECT_TRUE(r.gold_table.ordered);

  // Always-No never answers: EX false, MCQs incorrect without judge calls.
  sqlgen::PipelineContext no_ctx = ctx;
  no_ctx.gateway = std::make_shared<llm::Gateway>(
      llm::ScriptedProvider::from_text(finstat::testing::read_test_file("data/scripts/always_no.script")));
  const auto n = evaluate_item(item, no_ctx, {}, judge);
  EXPECT_EQ(n.scores.status, sqlgen::OutcomeStatus::exhausted);
  EXPECT_FALSE(n.scores.ex);
  EXPECT_DOUBLE_EQ(n.scores.ves, 0.0);
  EXPECT_TRUE(n.scores.em);
  EXPECT_EQ(n.scores.mcq_correct, 0u);
  for (const auto& v : n.mcq.verdicts) EXPECT_FALSE(v.judged);

  const auto report = aggregate({r.scores, n.scores});
  EXPECT_DOUBLE_EQ(report.ex, 0.5);
  EXPECT_NEAR(*report.mcq_accuracy, 0.5, 1e-12);
}

}  // namespace
