#include "finstat/core/http.hpp"

#include <httplib.h>

namespace finstat::http {

Endpoint parse_endpoint(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw std::invalid_argument("URL lacks a scheme: " + std::string(url));
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw std::invalid_argument("unsupported URL scheme: " + std::string(scheme));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.scheme_host_port = std::string(url.substr(0, path_start));
  if (e.scheme_host_port.size() == scheme_end + 3) throw std::invalid_argument("URL lacks a host: " + std::string(url));
  if (path_start != std::string_view::npos) {
    e.path_prefix = std::string(url.substr(path_start));
    while (!e.path_prefix.empty() && e.path_prefix.back() == '/') e.path_prefix.pop_back();
  }
  return e;
}

JsonResponse post_json(const Endpoint& endpoint, std::string_view path, const nlohmann::json& payload,
                       const std::map<std::string, std::string>& headers, std::chrono::milliseconds timeout) {
  httplib::Client client(endpoint.scheme_host_port);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  const auto full_path = endpoint.path_prefix + std::string(path);
  auto res = client.Post(full_path, h, payload.dump(), "application/json");
  if (!res) {
    throw TransportError("POST " + endpoint.scheme_host_port + full_path + " failed: " +
                         httplib::to_string(res.error()));
  }
  JsonResponse out;
  out.status = res->status;
  out.raw = res->body;
  out.body = nlohmann::json::parse(res->body, nullptr, false);
  if (out.body.is_discarded()) out.body = nullptr;
  return out;
}

}  // namespace finstat::http
