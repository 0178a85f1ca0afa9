#pragma once

#include <chrono>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace finstat::http {

// "https://api.example.com/v1" -> {"https://api.example.com", "/v1"}
struct Endpoint {
  std::string scheme_host_port;
  std::string path_prefix;  // no trailing slash; empty for the root
};

// Throws std::invalid_argument for anything but http:// or https:// URLs.
Endpoint parse_endpoint(std::string_view url);

// Connection refused, DNS failure, read timeout and the like.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JsonResponse {
  int status = 0;
  nlohmann::json body;  // null when the payload is not JSON
  std::string raw;
};

JsonResponse post_json(const Endpoint& endpoint, std::string_view path, const nlohmann::json& payload,
                       const std::map<std::string, std::string>& headers, std::chrono::milliseconds timeout);

}  // namespace finstat::http
