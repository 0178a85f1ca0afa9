#include "finstat/service/server.hpp"

#include <chrono>
#include <fstream>
#include <future>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "finstat/core/text.hpp"
#include "finstat/eval/evaluation.hpp"

namespace finstat::service {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

constexpr std::size_t k_max_question_bytes = 4000;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct RunState {
  std::promise<sqlgen::PipelineOutcome> promise;
  std::shared_future<sqlgen::PipelineOutcome> future = promise.get_future().share();
  std::promise<std::string> id_promise;
};

}  // namespace

// Counts pipeline runs that may outlive their HTTP request.
struct ApiServer::Runs {
  std::mutex mutex;
  std::condition_variable cv;
  std::size_t active = 0;

  void enter() {
    std::lock_guard lock(mutex);
    ++active;
  }
  void leave() {
    {
      std::lock_guard lock(mutex);
      --active;
    }
    cv.notify_all();
  }
  void wait_idle() {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return active == 0; });
  }
};

ApiServer::ApiServer(Components components, ServerSettings settings, std::string api_key)
    : components_(std::move(components)),
      settings_(std::move(settings)),
      api_key_(std::move(api_key)),
      server_(std::make_unique<httplib::Server>()),
      traces_(std::make_unique<TraceStore>(settings_.trace_dir, settings_.trace_capacity)),
      runs_(std::make_shared<Runs>()) {
  const auto threads = std::max<std::size_t>(settings_.threads, 2);
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  install_routes();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start() {
  port_ = settings_.port == 0 ? server_->bind_to_any_port(settings_.host)
                              : (server_->bind_to_port(settings_.host, settings_.port) ? settings_.port : -1);
  if (port_ <= 0) {
    throw std::runtime_error("cannot bind " + settings_.host + ":" + std::to_string(settings_.port));
  }
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  spdlog::info("listening on http://{}:{}", settings_.host, port_);
  return port_;
}

void ApiServer::wait() {
  if (listener_.joinable()) listener_.join();
}

void ApiServer::stop() {
  std::lock_guard lock(stop_mutex_);
  if (stopped_) return;
  stopped_ = true;
  server_->stop();
  if (listener_.joinable()) listener_.join();
  runs_->wait_idle();
}

json ApiServer::health() const {
  json components;
  bool ready = true;
  const auto add = [&](const char* name, std::optional<std::string> problem) {
    components[name] = {{"ready", !problem}, {"detail", problem ? *problem : "ok"}};
    ready = ready && !problem;
  };

  std::optional<std::string> warehouse_problem;
  try {
    if (!components_.warehouse || !components_.warehouse->ready()) warehouse_problem = "warehouse not seeded";
  } catch (const std::exception& e) {
    warehouse_problem = e.what();
  }
  add("warehouse", warehouse_problem);

  std::optional<std::string> index_problem;
  if (!components_.index) {
    index_problem = "no index";
  } else {
    for (auto ns : {vec::Namespace::company, vec::Namespace::account, vec::Namespace::ratio}) {
      if (components_.index->size(ns) == 0) index_problem = "namespace " + std::string(vec::to_string(ns)) + " empty";
    }
  }
  add("index", index_problem);

  std::optional<std::string> provider_problem;
  if (!components_.gateway) {
    provider_problem = "no provider configured";
  } else if (components_.provider_ready) {
    provider_problem = components_.provider_ready();
  }
  add("provider", provider_problem);

  return {{"ready", ready}, {"components", components}};
}

void ApiServer::install_routes() {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", settings_.cors_origin},
                         {"Access-Control-Allow-Headers", "Content-Type, X-API-Key"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Max-Age", "600"}});

  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    if (api_key_.empty() || req.method == "OPTIONS" || req.path == "/api/healthz") {
      return httplib::Server::HandlerResponse::Unhandled;
    }
    if (req.get_header_value("X-API-Key") != api_key_) {
      send_error(res, 401, "unauthorized", "missing or wrong X-API-Key header");
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "unknown error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send_error(res, 500, "internal_error", message);
  });

  s.Get("/api/healthz", [this](const httplib::Request&, httplib::Response& res) {
    const auto h = health();
    send_json(res, h["ready"].get<bool>() ? 200 : 503, h);
  });

  s.Get("/api/schema", [this](const httplib::Request&, httplib::Response& res) {
    const auto& w = *components_.warehouse;
    json body = store::to_json(w.catalog());
    try {
      body["industries"] = w.industries();
      body["company_count"] = w.company_codes().size();
    } catch (const std::exception&) {
      body["industries"] = json::array();
      body["company_count"] = 0;
    }
    send_json(res, 200, body);
  });

  s.Get(R"(/api/trace/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    if (!TraceStore::valid_id(id)) return send_error(res, 404, "trace_not_found", "no trace " + id);
    const auto found = traces_->get(id);
    switch (found.state) {
      case TraceStore::State::ready: return send_json(res, 200, found.trace);
      case TraceStore::State::pending: return send_json(res, 202, {{"status", "pending"}, {"trace_id", id}});
      case TraceStore::State::missing: return send_error(res, 404, "trace_not_found", "no trace " + id);
    }
  });

  s.Post("/api/ask", [this](const httplib::Request& req, httplib::Response& res) {
    const auto start = Clock::now();
    const auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "invalid_json", "body must be a JSON object");
    if (!body.contains("question") || !body["question"].is_string()) {
      return send_error(res, 400, "missing_question", "\"question\" must be a string");
    }
    const auto question = body["question"].get<std::string>();
    if (text::trim(question).empty()) return send_error(res, 400, "empty_question", "question is empty");
    if (question.size() > k_max_question_bytes) return send_error(res, 400, "question_too_long", "question too long");

    auto config = components_.pipeline;
    bool want_trace = false;
    if (body.contains("options")) {
      const auto& o = body["options"];
      if (!o.is_object()) return send_error(res, 400, "invalid_options", "\"options\" must be an object");
      if (o.contains("multistep")) {
        if (!o["multistep"].is_boolean()) return send_error(res, 400, "invalid_options", "multistep must be boolean");
        config.multistep = o["multistep"].get<bool>();
      }
      if (o.contains("trace")) {
        if (!o["trace"].is_boolean()) return send_error(res, 400, "invalid_options", "trace must be boolean");
        want_trace = o["trace"].get<bool>();
      }
    }
    if (!components_.gateway) return send_error(res, 503, "not_ready", "no provider configured");
    if (!components_.warehouse->ready()) return send_error(res, 503, "not_ready", "warehouse not seeded");

    // The run lives on its own thread so a missed deadline can leave it
    // running; its trace is stored whenever it finishes.
    auto state = std::make_shared<RunState>();
    auto id_future = state->id_promise.get_future();
    runs_->enter();
    std::thread([state, ctx = components_.context(), config, question, traces = traces_.get(), runs = runs_] {
      try {
        auto outcome = sqlgen::run_pipeline(question, ctx, config, [&](const std::string& id) {
          traces->mark_pending(id);
          state->id_promise.set_value(id);
        });
        traces->put(outcome.trace.trace_id, sqlgen::to_json(outcome));
        state->promise.set_value(std::move(outcome));
      } catch (...) {
        state->promise.set_exception(std::current_exception());
      }
      runs->leave();
    }).detach();

    const auto trace_id = id_future.get();
    if (state->future.wait_for(settings_.deadline) != std::future_status::ready) {
      const json pending{{"status", config.multistep ? "pending" : "timeout"},
                         {"trace_id", trace_id},
                         {"elapsed_ms", elapsed_ms(start)}};
      return send_json(res, config.multistep ? 202 : 504, pending);
    }
    const auto& outcome = state->future.get();
    json out{{"status", sqlgen::to_string(outcome.status)}, {"trace_id", trace_id}, {"elapsed_ms", elapsed_ms(start)}};
    int code = 200;
    if (outcome.status == sqlgen::OutcomeStatus::answered) {
      const auto table = to_json(*outcome.final_table);
      out["columns"] = table["columns"];
      out["rows"] = table["rows"];
      out["truncated"] = outcome.final_table->truncated;
    } else if (outcome.status == sqlgen::OutcomeStatus::exhausted) {
      out["attempts"] = outcome.trace.attempts.size();
      out["max_iterations"] = outcome.trace.max_iterations;
    } else {
      code = 502;
      out["error"] = {{"code", "provider_error"}, {"message", outcome.trace.error.value_or("provider failure")}};
    }
    if (want_trace) out["trace"] = sqlgen::to_json(outcome);
    send_json(res, code, out);
  });

  s.Post("/api/eval", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "invalid_json", "body must be a JSON object");
    if (!components_.gateway || !components_.judge) return send_error(res, 503, "not_ready", "no provider configured");

    std::vector<eval::EvalItem> items;
    try {
      if (body.contains("batch_file")) {
        std::ifstream in(body["batch_file"].get<std::string>(), std::ios::binary);
        if (!in) return send_error(res, 400, "batch_unreadable", "cannot read batch file");
        std::ostringstream buf;
        buf << in.rdbuf();
        items = eval::parse_eval_jsonl(buf.str());
      } else if (body.contains("records") && body["records"].is_array()) {
        std::string jsonl;
        for (const auto& r : body["records"]) jsonl += r.dump() + "\n";
        items = eval::parse_eval_jsonl(jsonl);
      } else {
        return send_error(res, 400, "invalid_request", "expected \"batch_file\" or \"records\"");
      }
    } catch (const std::exception& e) {
      return send_error(res, 400, "invalid_batch", e.what());
    }
    if (items.empty()) return send_error(res, 400, "empty_batch", "empty batch");

    std::vector<eval::RecordScores> scores;
    json records = json::array();
    for (const auto& item : items) {
      const auto r = eval::evaluate_item(item, components_.context(), components_.pipeline, *components_.judge);
      traces_->put(r.prediction.trace.trace_id, sqlgen::to_json(r.prediction));
      scores.push_back(r.scores);
      records.push_back(eval::to_json(r));
    }
    send_json(res, 200, {{"report", eval::to_json(eval::aggregate(scores))}, {"records", records}});
  });
}

}  // namespace finstat::service
