#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "finstat/core/http.hpp"

namespace finstat::vec {

using Vector = std::vector<double>;

// Failure of an embedding provider. `retryable` is set for transport problems
// and rate limits; bad credentials or malformed replies are final.
class EmbeddingError : public std::runtime_error {
 public:
  EmbeddingError(std::string provider, const std::string& message, bool retryable)
      : std::runtime_error(provider + ": " + message), provider_(std::move(provider)), retryable_(retryable) {}
  const std::string& provider() const { return provider_; }
  bool retryable() const { return retryable_; }

 private:
  std::string provider_;
  bool retryable_;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  // Throws std::invalid_argument on empty (or all-whitespace) text.
  virtual Vector embed(std::string_view text) const = 0;
};

// Offline embedder: signed feature hashing of character 2- and 3-grams.
//
// Text is lower-cased, whitespace runs collapse to one space, and the result
// is padded with a space on each side so word boundaries form n-grams. Each
// n-gram's FNV-1a hash picks a bucket (h mod D) and a sign (top bit). The
// vector is L2-normalised.
class HashingEmbedder final : public Embedder {
 public:
  static constexpr std::size_t k_default_dimension = 256;

  explicit HashingEmbedder(std::size_t dimension = k_default_dimension);
  std::string name() const override;
  std::size_t dimension() const override { return dimension_; }
  Vector embed(std::string_view text) const override;

 private:
  std::size_t dimension_;
};

struct RemoteEmbedderConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key;
  std::size_t dimension = 0;  // expected length; 0 accepts the first reply's length
  std::chrono::milliseconds timeout{30000};
};

// OpenAI-compatible POST {base_url}/embeddings with {"model", "input"}; the
// vector is read from data[0].embedding and L2-normalised.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);
  std::string name() const override;
  std::size_t dimension() const override;
  Vector embed(std::string_view text) const override;

 private:
  RemoteEmbedderConfig config_;
  http::Endpoint endpoint_;
  mutable std::atomic<std::size_t> dimension_;
};

double cosine(const Vector& a, const Vector& b);
double l2_norm(const Vector& v);

}  // namespace finstat::vec
