#include "finstat/service/app.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "finstat/llm/remote.hpp"
#include "finstat/llm/scripted.hpp"
#include "finstat/store/mapping.hpp"
#include "finstat/vec/warehouse_index.hpp"

namespace finstat::service {
namespace {

std::string resolve(const std::filesystem::path& base, const std::string& path) {
  if (path.empty() || base.empty() || std::filesystem::path(path).is_absolute() || path == ":memory:") return path;
  return (base / path).lexically_normal().string();
}

std::string env_or_throw(const std::string& var, std::string_view what) {
  if (var.empty()) throw ConfigError(std::string(what) + ": api_key_env is empty");
  const char* v = std::getenv(var.c_str());
  if (v == nullptr || *v == '\0') {
    throw ConfigError(std::string(what) + ": environment variable " + var + " is not set");
  }
  return v;
}

std::optional<std::string> file_unreadable(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "cannot read " + path;
  return std::nullopt;
}

}  // namespace

ProviderSettings provider_settings_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ProviderSettings p;
  if (!j.contains("kind")) throw ConfigError("missing config key: provider.kind");
  p.kind = j.at("kind").get<std::string>();
  p.script = resolve(base_dir, j.value("script", ""));
  p.replay_file = resolve(base_dir, j.value("replay_file", ""));
  p.record_file = resolve(base_dir, j.value("record_file", ""));
  p.id = j.value("id", p.id);
  p.base_url = j.value("base_url", p.base_url);
  p.model = j.value("model", p.model);
  p.api_key_env = j.value("api_key_env", p.api_key_env);
  return p;
}

AppConfig AppConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  AppConfig c;
  try {
    if (j.contains("warehouse")) c.warehouse = resolve(base_dir, j.at("warehouse").value("location", c.warehouse));
    else c.warehouse = resolve(base_dir, c.warehouse);
    if (j.contains("provider")) c.provider = provider_settings_from_json(j.at("provider"), base_dir);
    if (j.contains("judge")) c.judge = provider_settings_from_json(j.at("judge"), base_dir);
    if (j.contains("embedder")) {
      const auto& e = j.at("embedder");
      c.embedder.kind = e.value("kind", c.embedder.kind);
      c.embedder.base_url = e.value("base_url", c.embedder.base_url);
      c.embedder.model = e.value("model", c.embedder.model);
      c.embedder.api_key_env = e.value("api_key_env", c.embedder.api_key_env);
      c.embedder.dimension = e.value("dimension", c.embedder.dimension);
    }
    if (j.contains("index")) c.index_path = resolve(base_dir, j.at("index").value("path", ""));
    if (j.contains("fewshots")) c.fewshots_path = resolve(base_dir, j.at("fewshots").value("path", ""));
    if (j.contains("gateway")) {
      const auto& g = j.at("gateway");
      c.gateway.max_retries = g.value("max_retries", c.gateway.max_retries);
      c.gateway.initial_backoff = std::chrono::milliseconds(g.value("initial_backoff_ms", c.gateway.initial_backoff.count()));
      c.gateway.backoff_multiplier = g.value("backoff_multiplier", c.gateway.backoff_multiplier);
      c.gateway.timeout = std::chrono::milliseconds(g.value("timeout_ms", c.gateway.timeout.count()));
    }
    if (j.contains("pipeline")) c.pipeline = sqlgen::pipeline_config_from_json(j.at("pipeline"));
    if (j.contains("server")) {
      const auto& s = j.at("server");
      c.server.host = s.value("host", c.server.host);
      c.server.port = s.value("port", c.server.port);
      c.server.api_key_env = s.value("api_key_env", c.server.api_key_env);
      c.server.cors_origin = s.value("cors_origin", c.server.cors_origin);
      c.server.deadline = std::chrono::milliseconds(s.value("deadline_ms", c.server.deadline.count()));
      c.server.trace_dir = resolve(base_dir, s.value("trace_dir", c.server.trace_dir));
      c.server.trace_capacity = s.value("trace_capacity", c.server.trace_capacity);
      c.server.threads = s.value("threads", c.server.threads);
    } else {
      c.server.trace_dir = resolve(base_dir, c.server.trace_dir);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  if (const char* db = std::getenv(store::k_warehouse_env); db != nullptr && *db != '\0') c.warehouse = db;
  return c;
}

AppConfig AppConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("config file " + path + " is not a JSON object");
  return from_json(j, std::filesystem::absolute(path).parent_path());
}

nlohmann::json to_json(const AppConfig& c) {
  const auto provider = [](const ProviderSettings& p) {
    return nlohmann::json{{"kind", p.kind},       {"script", p.script},   {"replay_file", p.replay_file},
                          {"record_file", p.record_file}, {"id", p.id},   {"base_url", p.base_url},
                          {"model", p.model},     {"api_key_env", p.api_key_env}};
  };
  nlohmann::json j{{"warehouse", {{"location", c.warehouse}}},
                   {"embedder", {{"kind", c.embedder.kind}, {"model", c.embedder.model}}},
                   {"index", {{"path", c.index_path}}},
                   {"fewshots", {{"path", c.fewshots_path}}},
                   {"pipeline", sqlgen::to_json(c.pipeline)},
                   {"server",
                    {{"host", c.server.host},
                     {"port", c.server.port},
                     {"cors_origin", c.server.cors_origin},
                     {"deadline_ms", c.server.deadline.count()},
                     {"trace_dir", c.server.trace_dir},
                     {"trace_capacity", c.server.trace_capacity}}}};
  if (c.provider) j["provider"] = provider(*c.provider);
  if (c.judge) j["judge"] = provider(*c.judge);
  return j;
}

Provisioned make_gateway(const ProviderSettings& s, const llm::GatewayConfig& gateway) {
  std::shared_ptr<llm::Provider> provider;
  ReadinessCheck ready;
  if (s.kind == "scripted") {
    if (s.script.empty()) throw ConfigError("missing config key: provider.script");
    try {
      provider = llm::ScriptedProvider::from_file(s.script);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("provider.script: ") + e.what());
    }
    ready = [path = s.script] { return file_unreadable(path); };
  } else if (s.kind == "replay") {
    if (s.replay_file.empty()) throw ConfigError("missing config key: provider.replay_file");
    try {
      // A saved trace document replays directly; anything else is a recording (JSONL).
      std::ifstream in(s.replay_file, std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      const auto doc = nlohmann::json::parse(buf.str(), nullptr, false);
      if (!doc.is_discarded() && doc.is_object() && doc.contains("model_replies")) {
        provider = std::make_shared<llm::ReplayProvider>(sqlgen::replay_table(doc));
      } else {
        provider = llm::ReplayProvider::from_file(s.replay_file);
      }
    } catch (const std::exception& e) {
      throw ConfigError(std::string("provider.replay_file: ") + e.what());
    }
    ready = [path = s.replay_file] { return file_unreadable(path); };
  } else if (s.kind == "openai" || s.kind == "remote") {
    if (s.model.empty()) throw ConfigError("missing config key: provider.model");
    provider = std::make_shared<llm::RemoteProvider>(
        llm::RemoteProviderConfig{s.id, s.base_url, s.model, env_or_throw(s.api_key_env, "provider")});
    ready = [var = s.api_key_env]() -> std::optional<std::string> {
      const char* v = std::getenv(var.c_str());
      if (v == nullptr || *v == '\0') return var + " is not set";
      return std::nullopt;
    };
  } else {
    throw ConfigError("unknown provider kind '" + s.kind + "' (expected scripted, replay or openai)");
  }
  if (!s.record_file.empty()) provider = std::make_shared<llm::RecordingProvider>(provider, s.record_file);
  return {std::make_shared<llm::Gateway>(std::move(provider), gateway), std::move(ready)};
}

std::shared_ptr<const vec::Embedder> make_embedder(const EmbedderSettings& s) {
  if (s.kind == "hashing") return std::make_shared<vec::HashingEmbedder>();
  if (s.kind == "remote") {
    if (s.model.empty()) throw ConfigError("missing config key: embedder.model");
    return std::make_shared<vec::RemoteEmbedder>(vec::RemoteEmbedderConfig{
        s.base_url, s.model, env_or_throw(s.api_key_env, "embedder"), s.dimension, std::chrono::milliseconds(30000)});
  }
  throw ConfigError("unknown embedder kind '" + s.kind + "' (expected hashing or remote)");
}

void build_index(vec::VectorIndex& index, const store::Warehouse& warehouse, const sqlgen::FewShotStore& fewshots) {
  vec::index_warehouse(index, warehouse, store::AccountMapping::shipped());
  fewshots.index_into(index);
}

Components build_components(const AppConfig& config, bool require_provider) {
  Components c;
  c.pipeline = config.pipeline;
  c.warehouse = store::Warehouse::open(config.warehouse);
  c.fewshots = std::make_shared<sqlgen::FewShotStore>(
      config.fewshots_path.empty() ? sqlgen::FewShotStore::shipped(c.warehouse->catalog())
                                   : sqlgen::FewShotStore::from_file(config.fewshots_path, c.warehouse->catalog()));
  c.index = std::make_shared<vec::VectorIndex>(make_embedder(config.embedder));
  if (!config.index_path.empty() && std::filesystem::exists(config.index_path)) {
    c.index->load(config.index_path);
    spdlog::info("loaded vector index from {}", config.index_path);
  } else if (c.warehouse->ready()) {
    build_index(*c.index, *c.warehouse, *c.fewshots);
  }

  if (config.provider) {
    auto p = make_gateway(*config.provider, config.gateway);
    c.gateway = p.gateway;
    c.provider_ready = p.ready;
    c.judge = config.judge ? make_gateway(*config.judge, config.gateway).gateway : c.gateway;
  } else if (require_provider) {
    throw ConfigError("missing config key: provider (or pass --provider/--script)");
  } else {
    c.provider_ready = [] { return std::optional<std::string>("no provider configured"); };
  }
  return c;
}

}  // namespace finstat::service
