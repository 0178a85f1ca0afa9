#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "finstat/service/app.hpp"
#include "finstat/service/trace_store.hpp"

namespace httplib {
class Server;
}

namespace finstat::service {

// HTTP surface:
//   POST /api/ask         {question, options: {multistep, trace}}
//   GET  /api/trace/{id}  full trace document (202 while the run is in flight)
//   GET  /api/schema      catalog summary
//   GET  /api/healthz     component readiness (503 when not ready)
//   POST /api/eval        {batch_file} or {records: [...]} -> metrics report
// Every response carries CORS headers; OPTIONS preflights answer 204. When an
// API key is set, every route except healthz and preflight requires X-API-Key.
class ApiServer {
 public:
  ApiServer(Components components, ServerSettings settings, std::string api_key = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds (port 0 picks a free one), starts listening on a background thread
  // and returns the bound port. Throws std::runtime_error when binding fails.
  int start();
  // Blocks until stop() is called.
  void wait();
  // Stops listening and waits for background pipeline runs to finish.
  void stop();

  int port() const { return port_; }
  TraceStore& traces() { return *traces_; }
  nlohmann::json health() const;

 private:
  struct Runs;

  void install_routes();

  Components components_;
  ServerSettings settings_;
  std::string api_key_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<TraceStore> traces_;
  std::shared_ptr<Runs> runs_;
  std::thread listener_;
  int port_ = 0;
  std::mutex stop_mutex_;
  bool stopped_ = false;
};

}  // namespace finstat::service
