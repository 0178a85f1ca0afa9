// finstat: warehouse setup, indexing, single questions, batch evaluation and
// the HTTP API from one binary.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage or configuration error,
// 3 question not answered (exhausted), 4 provider failure.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "finstat/eval/evaluation.hpp"
#include "finstat/service/app.hpp"
#include "finstat/service/server.hpp"
#include "finstat/store/fixtures.hpp"
#include "finstat/vec/warehouse_index.hpp"

namespace fs = std::filesystem;
using namespace finstat;
using nlohmann::json;

namespace {

constexpr int k_exit_runtime = 1;
constexpr int k_exit_usage = 2;
constexpr int k_exit_exhausted = 3;
constexpr int k_exit_failed = 4;

struct Globals {
  std::string config_path;
  std::string provider;
  std::string script;
  std::string replay;
  std::string model;
  std::string db;
  bool verbose = false;
};

service::AppConfig load_config(const Globals& g) {
  auto config = g.config_path.empty() ? service::AppConfig::from_json(json::object(), fs::current_path())
                                      : service::AppConfig::from_file(g.config_path);
  if (!g.db.empty()) config.warehouse = g.db;

  // --script / --replay imply the provider kind; --provider alone keeps the
  // configured file paths.
  std::string kind = g.provider;
  if (kind.empty() && !g.script.empty()) kind = "scripted";
  if (kind.empty() && !g.replay.empty()) kind = "replay";
  if (!kind.empty()) {
    auto p = config.provider.value_or(service::ProviderSettings{});
    p.kind = kind;
    if (!g.script.empty()) p.script = g.script;
    if (!g.replay.empty()) p.replay_file = g.replay;
    if (!g.model.empty()) p.model = g.model;
    config.provider = p;
  }
  return config;
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_all(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

// ---- fixtures ----

int cmd_seed(const Globals& g, const std::string& profile_name, bool force) {
  const auto config = load_config(g);
  const auto profile = store::FixtureProfile::from_name(profile_name);
  if (!profile) throw service::ConfigError("unknown fixture profile '" + profile_name + "' (expected train or test)");
  if (config.warehouse != ":memory:" && fs::exists(config.warehouse)) {
    if (!force && store::Warehouse::open(config.warehouse)->ready()) {
      throw std::runtime_error("warehouse " + config.warehouse + " is already seeded (use --force to replace it)");
    }
    fs::remove(config.warehouse);
  }
  const auto w = store::seed_fixture(*profile, config.warehouse);
  for (const auto& [table, n] : w->row_counts()) std::cout << table << "\t" << n << "\n";
  return 0;
}

int cmd_export(const Globals& g, const std::string& out_path) {
  const auto config = load_config(g);
  const auto w = store::Warehouse::open(config.warehouse);
  if (!w->ready()) throw std::runtime_error("warehouse " + config.warehouse + " is not seeded");
  if (out_path.empty() || out_path == "-") {
    store::export_fixture(*w, std::cout);
  } else {
    write_all(out_path, store::export_fixture(*w));
  }
  return 0;
}

// ---- ingest ----

int cmd_ingest(const Globals& g, const std::vector<std::string>& files, const std::string& format_name,
               const std::string& delimiter, const std::string& mapping_path, const std::string& rejects_path) {
  const auto config = load_config(g);
  const auto format = store::format_kind_from_string(format_name);
  if (!format) throw service::ConfigError("unknown format '" + format_name + "' (expected bank, corporation or securities)");
  if (delimiter.size() != 1) throw service::ConfigError("--delimiter must be one character");
  const auto mapping =
      mapping_path.empty() ? store::AccountMapping::shipped() : store::AccountMapping::parse_tsv(read_all(mapping_path));

  const auto w = store::Warehouse::open(config.warehouse);
  w->create_schema();

  std::ostringstream rejected;
  std::size_t rejected_count = 0;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file);
    const auto rows = store::read_statement_records(in, delimiter[0]);
    const auto report = store::ingest_statements(*w, rows, *format, mapping);
    std::cout << file << ": inserted " << report.inserted << " (" << report.remapped << " remapped), rejected "
              << report.rejected.size() << "\n";
    for (const auto& r : report.rejected) {
      rejected << store::quote_dsv_field(file, ',') << ',' << r.row.line << ',' << r.reason;
      for (const auto* f : {&r.row.stock_code, &r.row.year, &r.row.quarter, &r.row.raw_code, &r.row.data}) {
        rejected << ',' << store::quote_dsv_field(*f, ',');
      }
      rejected << '\n';
    }
    rejected_count += report.rejected.size();
  }

  if (rejected_count > 0) {
    const auto text = "file,line,reason,stock_code,year,quarter,raw_code,data\n" + rejected.str();
    if (rejects_path.empty()) std::cerr << text;
    else write_all(rejects_path, text);
  }
  return 0;
}

// ---- index ----

int cmd_index(const Globals& g, std::string out_path) {
  auto config = load_config(g);
  if (out_path.empty()) out_path = config.index_path;
  if (out_path.empty()) throw service::ConfigError("missing config key: index.path (or pass --out)");
  config.index_path.clear();  // always rebuild
  const auto c = service::build_components(config, false);
  if (!c.warehouse->ready()) throw std::runtime_error("warehouse " + config.warehouse + " is not seeded");
  c.index->save(out_path);
  for (auto ns : {vec::Namespace::company, vec::Namespace::account, vec::Namespace::ratio, vec::Namespace::fewshot}) {
    std::cout << vec::to_string(ns) << "\t" << c.index->size(ns) << "\n";
  }
  return 0;
}

// ---- ask ----

int cmd_ask(const Globals& g, const std::string& question, bool multistep, bool as_json, const std::string& trace_out,
            std::size_t max_rows) {
  const auto config = load_config(g);
  auto c = service::build_components(config);
  if (!c.warehouse->ready()) throw std::runtime_error("warehouse " + config.warehouse + " is not seeded");
  auto pipeline = c.pipeline;
  if (multistep) pipeline.multistep = true;

  const auto outcome = sqlgen::run_pipeline(question, c.context(), pipeline);
  const auto doc = sqlgen::to_json(outcome);
  if (!trace_out.empty()) write_all(trace_out, doc.dump(2) + "\n");

  if (as_json) {
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "status: " << sqlgen::to_string(outcome.status) << "\n";
    std::cout << "trace: " << outcome.trace.trace_id << "\n";
    if (!outcome.trace.attempts.empty()) {
      const auto& last = outcome.trace.attempts.back();
      std::cout << "sql:\n" << last.executed_sql.value_or(last.sql) << "\n";
    }
    if (outcome.final_table) {
      auto rendered = render_table(*outcome.final_table, max_rows);
      if (!rendered.empty() && rendered.back() != '\n') rendered += '\n';
      std::cout << "\n" << rendered;
    }
    if (outcome.trace.error) std::cerr << "error: " << *outcome.trace.error << "\n";
  }
  switch (outcome.status) {
    case sqlgen::OutcomeStatus::answered: return 0;
    case sqlgen::OutcomeStatus::exhausted: return k_exit_exhausted;
    case sqlgen::OutcomeStatus::failed: return k_exit_failed;
  }
  return k_exit_runtime;
}

// ---- eval ----

int cmd_eval(const Globals& g, const std::string& batch_path, const std::string& out_path, bool as_json,
             std::size_t timing_runs) {
  const auto items = eval::parse_eval_jsonl(read_all(batch_path));
  if (items.empty()) throw std::runtime_error("empty batch: " + batch_path + " has no records");

  const auto config = load_config(g);
  const auto c = service::build_components(config);
  if (!c.warehouse->ready()) throw std::runtime_error("warehouse " + config.warehouse + " is not seeded");

  std::vector<eval::RecordScores> scores;
  std::ostringstream records;
  for (const auto& item : items) {
    const auto r = eval::evaluate_item(item, c.context(), c.pipeline, *c.judge, {timing_runs});
    spdlog::info("{}: {} ex={} mcq={}/{}", item.id, sqlgen::to_string(r.prediction.status), r.scores.ex,
                 r.scores.mcq_correct, r.scores.mcq_total);
    scores.push_back(r.scores);
    records << eval::to_json(r).dump() << "\n";
  }
  const auto report = eval::aggregate(scores);
  if (!out_path.empty()) write_all(out_path, records.str());
  if (as_json) std::cout << eval::to_json(report).dump(2) << "\n";
  else std::cout << eval::render_report(report);
  return 0;
}

// ---- serve ----

int cmd_serve(const Globals& g, const std::string& host, int port) {
  auto config = load_config(g);
  if (!host.empty()) config.server.host = host;
  if (port >= 0) config.server.port = port;

  std::string api_key;
  if (const char* v = std::getenv(config.server.api_key_env.c_str()); v != nullptr) api_key = v;
  if (!config.server.trace_dir.empty()) fs::create_directories(config.server.trace_dir);

  // Block the shutdown signals before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::ApiServer server(service::build_components(config, false), config.server, api_key);
  const int bound = server.start();
  std::cout << "serving on http://" << config.server.host << ":" << bound << std::endl;
  if (api_key.empty()) spdlog::warn("{} is not set; the API is unauthenticated", config.server.api_key_env);

  int sig = 0;
  sigwait(&signals, &sig);
  spdlog::info("signal {}, shutting down", sig);
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("finstat"));
  spdlog::set_pattern("%H:%M:%S %^%l%$ %v");
  spdlog::cfg::load_env_levels();

  CLI::App app{"FinStat2SQL: natural-language questions over a financial-statement warehouse"};
  Globals g;
  app.add_option("-c,--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--provider", g.provider, "Model provider: scripted, replay or openai");
  app.add_option("--script", g.script, "Script file for the scripted provider (implies --provider scripted)");
  app.add_option("--replay", g.replay, "Trace or recording to replay (implies --provider replay)");
  app.add_option("--model", g.model, "Model name for the openai provider");
  app.add_option("--db", g.db, "Warehouse location (overrides config and FINSTAT_DB)");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  int code = 0;

  auto* fixtures = app.add_subcommand("fixtures", "Seed or export the fixture warehouse");
  fixtures->require_subcommand(1);
  std::string profile = "test";
  bool force = false;
  auto* seed = fixtures->add_subcommand("seed", "Create and seed the warehouse");
  seed->add_option("profile,--profile", profile, "train or test")->capture_default_str();
  seed->add_flag("--force", force, "Replace an already seeded warehouse");
  seed->callback([&] { code = cmd_seed(g, profile, force); });
  std::string export_out;
  auto* exp = fixtures->add_subcommand("export", "Deterministic dump of every table");
  exp->add_option("-o,--out", export_out, "Output file (default stdout)");
  exp->callback([&] { code = cmd_export(g, export_out); });

  std::vector<std::string> ingest_files;
  std::string ingest_format, delimiter = ",", mapping, rejects;
  auto* ingest = app.add_subcommand("ingest", "Load statement rows from delimiter-separated files");
  ingest->add_option("files", ingest_files, "Input files")->required()->check(CLI::ExistingFile);
  ingest->add_option("--format", ingest_format, "bank, corporation or securities")->required();
  ingest->add_option("--mapping", mapping, "Account mapping TSV (default: the shipped mapping)")->check(CLI::ExistingFile);
  ingest->add_option("--delimiter", delimiter, "Field delimiter")->capture_default_str();
  ingest->add_option("--rejects", rejects, "Write rejected rows here (default stderr)");
  ingest->callback([&] { code = cmd_ingest(g, ingest_files, ingest_format, delimiter, mapping, rejects); });

  std::string index_out;
  auto* index = app.add_subcommand("index", "Build the vector index and save it");
  index->add_option("-o,--out", index_out, "Output file (default index.path from the config)");
  index->callback([&] { code = cmd_index(g, index_out); });

  std::string question, trace_out;
  bool multistep = false, as_json = false;
  std::size_t max_rows = 50;
  auto* ask = app.add_subcommand("ask", "Answer one question");
  ask->add_option("question", question, "Natural-language question")->required();
  ask->add_flag("--multistep", multistep, "Run exploration probes before generation");
  ask->add_flag("--json", as_json, "Print the full trace document");
  ask->add_option("--trace-out", trace_out, "Write the trace document to a file");
  ask->add_option("--max-rows", max_rows, "Rows to print")->capture_default_str();
  ask->callback([&] { code = cmd_ask(g, question, multistep, as_json, trace_out, max_rows); });

  std::string batch, eval_out;
  bool eval_json = false;
  std::size_t timing_runs = 3;
  auto* ev = app.add_subcommand("eval", "Score a JSONL batch (EM, CM, EX, VES, MCQ)");
  ev->add_option("batch", batch, "JSONL batch file")->required()->check(CLI::ExistingFile);
  ev->add_option("-o,--out", eval_out, "Per-record results as JSONL");
  ev->add_flag("--json", eval_json, "Print the report as JSON");
  ev->add_option("--timing-runs", timing_runs, "Executions per SQL for VES")->capture_default_str()->check(CLI::PositiveNumber);
  ev->callback([&] { code = cmd_eval(g, batch, eval_out, eval_json, timing_runs); });

  std::string host;
  int port = -1;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--host", host, "Bind address (default from config)");
  serve->add_option("--port", port, "Port; 0 picks a free one (default from config)");
  serve->callback([&] { code = cmd_serve(g, host, port); });

  app.parse_complete_callback([&] {
    if (g.verbose) spdlog::set_level(spdlog::level::debug);
  });

  try {
    app.parse(argc, argv);
    if (app.get_subcommands().empty()) {
      std::cerr << "error: a subcommand is required\n\n" << app.help();
      return k_exit_usage;
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ExtrasError& e) {
    std::cerr << "error: unknown subcommand or argument: " << CLI::detail::join(app.remaining()) << "\n\n" << app.help();
    return k_exit_usage;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return k_exit_usage;
  } catch (const service::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return k_exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return k_exit_runtime;
  }
  return code;
}
