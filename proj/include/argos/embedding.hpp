#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "argos/http.hpp"

namespace argos::embedding {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dims() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

double l2_norm(const EmbeddingVector& v);

/// Cosine similarity. Throws DimensionMismatch or ZeroNorm.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Componentwise mean, not re-normalized. Throws EmptyList or DimensionMismatch.
EmbeddingVector centroid(std::span<const EmbeddingVector> vs);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  virtual std::string model() const = 0;
  virtual std::size_t dims() const = 0;
  /// Unit-norm embedding of non-empty text.
  virtual EmbeddingVector embed(std::string_view text) = 0;
};

/// Deterministic bag-of-tokens embedding: each lowercase alphanumeric token t
/// contributes (fnv1a64(t + ":" + i) / (2^64 - 1)) * 2 - 1 to component i;
/// the sum is L2-normalized.
class MockEmbeddingProvider : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDims = 64;

  explicit MockEmbeddingProvider(std::size_t dims = kDefaultDims, std::string model = "fnv1a-bow");

  std::string name() const override { return "mock"; }
  std::string model() const override { return model_; }
  std::size_t dims() const override { return dims_; }
  EmbeddingVector embed(std::string_view text) override;

  static std::vector<std::string> tokenize(std::string_view text);

 private:
  std::size_t dims_;
  std::string model_;
};

struct RemoteEmbeddingOptions {
  std::string endpoint;  // full URL of the embeddings route
  std::string model;
  std::size_t dims = 0;  // 0: accept the dimensionality of the first response
  std::string api_token;
  http::RetryPolicy retry;
};

/// Client for endpoints accepting {"model", "input": [text]} and returning
/// {"data": [{"embedding": [...]}]}. Output is L2-normalized.
class RemoteEmbeddingProvider : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(RemoteEmbeddingOptions options, std::shared_ptr<http::Transport> transport,
                          http::Sleeper sleeper = http::real_sleeper());

  std::string name() const override { return "remote"; }
  std::string model() const override { return options_.model; }
  std::size_t dims() const override;
  EmbeddingVector embed(std::string_view text) override;

 private:
  RemoteEmbeddingOptions options_;
  std::shared_ptr<http::Transport> transport_;
  http::Sleeper sleeper_;
  mutable std::mutex mu_;
  std::size_t learned_dims_ = 0;
};

/// Thread-safe embedding cache keyed by (provider, model, sha256(text)).
class EmbeddingCache {
 public:
  struct Key {
    std::string provider;
    std::string model;
    std::string text_hash;
    auto operator<=>(const Key&) const = default;
  };

  std::optional<EmbeddingVector> lookup(const Key& key) const;
  void insert(const Key& key, EmbeddingVector value);
  std::size_t size() const;

  /// Line-delimited {provider, model, text_hash, dims, values}; a missing
  /// file yields an empty cache.
  void load(const std::filesystem::path& path);
  /// Writes entries in key order.
  void save(const std::filesystem::path& path) const;

 private:
  mutable std::mutex mu_;
  std::map<Key, EmbeddingVector> entries_;
};

/// Front door for embedding: validates input, consults the cache and
/// fans out batches under an in-flight limit.
class Embedder {
 public:
  Embedder(std::shared_ptr<EmbeddingProvider> provider, std::shared_ptr<EmbeddingCache> cache = nullptr,
           std::size_t max_in_flight = 4);

  EmbeddingVector embed(std::string_view text);
  std::vector<EmbeddingVector> embed_all(const std::vector<std::string>& texts);

  const EmbeddingProvider& provider() const { return *provider_; }
  std::size_t max_in_flight() const { return max_in_flight_; }

 private:
  std::shared_ptr<EmbeddingProvider> provider_;
  std::shared_ptr<EmbeddingCache> cache_;
  std::size_t max_in_flight_;
};

}  // namespace argos::embedding
