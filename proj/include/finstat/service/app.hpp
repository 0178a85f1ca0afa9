#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "finstat/llm/gateway.hpp"
#include "finstat/sqlgen/pipeline.hpp"

namespace finstat::service {

// A configuration problem the CLI reports verbatim (missing key, bad value).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProviderSettings {
  std::string kind;  // scripted | openai | replay
  std::string script;
  std::string replay_file;
  std::string record_file;  // optional: wrap the provider in a recorder
  std::string id = "openai";
  std::string base_url = "https://api.openai.com/v1";
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
};

struct EmbedderSettings {
  std::string kind = "hashing";  // hashing | remote
  std::string base_url = "https://api.openai.com/v1";
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::size_t dimension = 0;
};

struct ServerSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string api_key_env = "FINSTAT_API_KEY";
  std::string cors_origin = "*";
  std::chrono::milliseconds deadline{60000};
  std::string trace_dir = "traces";  // empty keeps traces in memory only
  std::size_t trace_capacity = 1000;
  std::size_t threads = 8;
};

// The single JSON configuration file. Relative paths resolve against the
// directory of the file; FINSTAT_DB overrides warehouse.location.
struct AppConfig {
  std::string warehouse = "finstat.db";
  std::optional<ProviderSettings> provider;
  std::optional<ProviderSettings> judge;  // defaults to provider
  EmbedderSettings embedder;
  std::string index_path;     // optional saved index; rebuilt from the warehouse when empty or missing
  std::string fewshots_path;  // optional; the shipped examples otherwise
  llm::GatewayConfig gateway;
  sqlgen::PipelineConfig pipeline;
  ServerSettings server;

  static AppConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static AppConfig from_file(const std::string& path);
};

nlohmann::json to_json(const AppConfig& config);
ProviderSettings provider_settings_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

// nullopt when the component is usable, else the reason it is not.
using ReadinessCheck = std::function<std::optional<std::string>()>;

struct Provisioned {
  std::shared_ptr<llm::Gateway> gateway;
  ReadinessCheck ready;
};

// Throws ConfigError naming the missing setting (script path, API key variable, ...).
Provisioned make_gateway(const ProviderSettings& settings, const llm::GatewayConfig& gateway);
std::shared_ptr<const vec::Embedder> make_embedder(const EmbedderSettings& settings);

struct Components {
  std::shared_ptr<store::Warehouse> warehouse;
  std::shared_ptr<vec::VectorIndex> index;
  std::shared_ptr<sqlgen::FewShotStore> fewshots;
  std::shared_ptr<llm::Gateway> gateway;
  std::shared_ptr<llm::Gateway> judge;
  ReadinessCheck provider_ready;
  sqlgen::PipelineConfig pipeline;

  sqlgen::PipelineContext context() const { return {warehouse, index, fewshots, gateway}; }
};

// Opens the warehouse, loads or builds the vector index (warehouse
// namespaces + few-shot store) and provisions the gateways. Requires a
// provider unless `require_provider` is false.
Components build_components(const AppConfig& config, bool require_provider = true);

// Fills every namespace of `index` from the warehouse and few-shot store.
void build_index(vec::VectorIndex& index, const store::Warehouse& warehouse, const sqlgen::FewShotStore& fewshots);

}  // namespace finstat::service
