#include "finstat/vec/embedder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>

#include "finstat/core/text.hpp"

namespace finstat::vec {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string normalise(std::string_view text) {
  std::string out = " ";
  bool space = true;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      if (!space) out += ' ';
      space = true;
    } else {
      out += static_cast<char>(std::tolower(c));
      space = false;
    }
  }
  if (!space) out += ' ';
  return out;
}

void normalise_in_place(Vector& v) {
  const double n = l2_norm(v);
  if (n == 0) return;
  for (auto& x : v) x /= n;
}

}  // namespace

double l2_norm(const Vector& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine of vectors with different lengths");
  double dot = 0;
  double na = 0;
  double nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::string HashingEmbedder::name() const { return "hashing-ngram-" + std::to_string(dimension_); }

Vector HashingEmbedder::embed(std::string_view text) const {
  if (text::trim(text).empty()) throw std::invalid_argument("cannot embed empty text");
  const auto s = normalise(text);
  Vector v(dimension_, 0.0);
  for (std::size_t n = 2; n <= 3; ++n) {
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
      const auto h = fnv1a(std::string_view(s).substr(i, n));
      v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  // Rare cancellation to all zeros: fall back to the unsigned bucket of the
  // whole string so the vector stays non-zero.
  if (l2_norm(v) == 0) v[fnv1a(s) % dimension_] = 1.0;
  normalise_in_place(v);
  return v;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config)
    : config_(std::move(config)), endpoint_(http::parse_endpoint(config_.base_url)),
      dimension_(config_.dimension) {
  if (config_.model.empty()) throw std::invalid_argument("remote embedder needs a model name");
}

std::string RemoteEmbedder::name() const { return "remote:" + config_.model; }

std::size_t RemoteEmbedder::dimension() const { return dimension_; }

Vector RemoteEmbedder::embed(std::string_view text) const {
  if (text::trim(text).empty()) throw std::invalid_argument("cannot embed empty text");
  std::map<std::string, std::string> headers;
  if (!config_.api_key.empty()) headers["Authorization"] = "Bearer " + config_.api_key;
  http::JsonResponse res;
  try {
    res = http::post_json(endpoint_, "/embeddings", {{"model", config_.model}, {"input", std::string(text)}},
                          headers, config_.timeout);
  } catch (const http::TransportError& e) {
    throw EmbeddingError(name(), e.what(), true);
  }
  if (res.status == 429 || res.status >= 500) {
    throw EmbeddingError(name(), "HTTP " + std::to_string(res.status), true);
  }
  if (res.status != 200) {
    throw EmbeddingError(name(), "HTTP " + std::to_string(res.status) + ": " + res.raw.substr(0, 200), false);
  }
  Vector v;
  try {
    v = res.body.at("data").at(0).at("embedding").get<Vector>();
  } catch (const nlohmann::json::exception& e) {
    throw EmbeddingError(name(), std::string("malformed embedding reply: ") + e.what(), false);
  }
  if (v.empty() || l2_norm(v) == 0) throw EmbeddingError(name(), "empty or zero embedding", false);
  std::size_t expected = 0;
  dimension_.compare_exchange_strong(expected, v.size());
  if (v.size() != dimension_.load()) {
    throw EmbeddingError(name(),
                         "dimension " + std::to_string(v.size()) + " != expected " + std::to_string(dimension_.load()),
                         false);
  }
  normalise_in_place(v);
  return v;
}

}  // namespace finstat::vec
