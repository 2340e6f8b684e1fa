#include "argos/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "argos/error.hpp"
#include "argos/parallel.hpp"
#include "argos/util.hpp"
#include "json.hpp"

namespace argos::embedding {

using nlohmann::json;

double l2_norm(const EmbeddingVector& v) {
  double sum = 0.0;
  for (double x : v.values) sum += x * x;
  return std::sqrt(sum);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dims() != b.dims()) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(a.dims()) + " vs " + std::to_string(b.dims()));
  }
  double na = l2_norm(a);
  double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroNorm, "cosine of zero vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dims(); ++i) dot += a.values[i] * b.values[i];
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

EmbeddingVector centroid(std::span<const EmbeddingVector> vs) {
  if (vs.empty()) throw Error(ErrorCode::EmptyList, "centroid of empty list");
  EmbeddingVector out{std::vector<double>(vs.front().dims(), 0.0)};
  for (const auto& v : vs) {
    if (v.dims() != out.dims()) throw Error(ErrorCode::DimensionMismatch, "centroid inputs differ in dims");
    for (std::size_t i = 0; i < v.dims(); ++i) out.values[i] += v.values[i];
  }
  for (auto& x : out.values) x /= static_cast<double>(vs.size());
  return out;
}

namespace {

EmbeddingVector normalize_or_throw(std::vector<double> values, ErrorCode code, const std::string& what) {
  EmbeddingVector v{std::move(values)};
  for (double x : v.values) {
    if (!std::isfinite(x)) throw Error(code, what + ": non-finite component");
  }
  double n = l2_norm(v);
  if (n == 0.0) throw Error(code, what + ": zero vector");
  for (auto& x : v.values) x /= n;
  return v;
}

}  // namespace

MockEmbeddingProvider::MockEmbeddingProvider(std::size_t dims, std::string model)
    : dims_(dims), model_(std::move(model)) {
  if (dims_ == 0) throw Error(ErrorCode::InvalidArgument, "mock embedding dims must be positive");
}

std::vector<std::string> MockEmbeddingProvider::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    if (alnum) {
      current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

EmbeddingVector MockEmbeddingProvider::embed(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::EmptyText, "");
  auto tokens = tokenize(text);
  if (tokens.empty()) throw Error(ErrorCode::EmptyText, "no alphanumeric tokens");

  constexpr double kMax = 18446744073709551615.0;  // 2^64 - 1
  std::vector<double> sum(dims_, 0.0);
  for (const auto& t : tokens) {
    for (std::size_t i = 0; i < dims_; ++i) {
      std::uint64_t h = fnv1a64(t + ":" + std::to_string(i));
      sum[i] += (static_cast<double>(h) / kMax) * 2.0 - 1.0;
    }
  }
  return normalize_or_throw(std::move(sum), ErrorCode::EmptyText, "mock embedding");
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingOptions options,
                                                 std::shared_ptr<http::Transport> transport, http::Sleeper sleeper)
    : options_(std::move(options)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (options_.endpoint.empty()) throw Error(ErrorCode::ConfigError, "embedding.endpoint");
  if (options_.model.empty()) throw Error(ErrorCode::ConfigError, "embedding.model");
  learned_dims_ = options_.dims;
}

std::size_t RemoteEmbeddingProvider::dims() const {
  std::lock_guard lock(mu_);
  return learned_dims_;
}

EmbeddingVector RemoteEmbeddingProvider::embed(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::EmptyText, "");
  json request = {{"model", options_.model}, {"input", json::array({std::string(text)})}};
  auto res = http::post_with_retries(*transport_, options_.endpoint, options_.api_token, request.dump(),
                                     options_.retry, sleeper_, ErrorCode::ProviderError);

  json body = json::parse(res.body, nullptr, false);
  if (body.is_discarded() || !body.contains("data") || !body["data"].is_array() || body["data"].empty() ||
      !body["data"][0].contains("embedding") || !body["data"][0]["embedding"].is_array()) {
    throw Error(ErrorCode::ProviderError, "unexpected embeddings response shape", res.status);
  }
  std::vector<double> values;
  for (const auto& x : body["data"][0]["embedding"]) {
    if (!x.is_number()) throw Error(ErrorCode::ProviderError, "non-numeric embedding component", res.status);
    values.push_back(x.get<double>());
  }
  {
    std::lock_guard lock(mu_);
    if (learned_dims_ == 0) learned_dims_ = values.size();
    if (values.size() != learned_dims_) {
      throw Error(ErrorCode::ProviderError,
                  "expected " + std::to_string(learned_dims_) + " dims, got " + std::to_string(values.size()),
                  res.status);
    }
  }
  return normalize_or_throw(std::move(values), ErrorCode::ProviderError, "remote embedding");
}

std::optional<EmbeddingVector> EmbeddingCache::lookup(const Key& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::insert(const Key& key, EmbeddingVector value) {
  std::lock_guard lock(mu_);
  entries_.insert_or_assign(key, std::move(value));
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void EmbeddingCache::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return;
  auto lines = split_lines(read_file(path));
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json j = json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorCode::MalformedRecord, path.string() + ":" + std::to_string(i + 1));
    }
    try {
      Key key{j.at("provider").get<std::string>(), j.at("model").get<std::string>(),
              j.at("text_hash").get<std::string>()};
      EmbeddingVector v{j.at("values").get<std::vector<double>>()};
      if (v.dims() != j.at("dims").get<std::size_t>()) throw Error(ErrorCode::DimensionMismatch, "cache entry");
      entries_.insert_or_assign(std::move(key), std::move(v));
    } catch (const json::exception&) {
      throw Error(ErrorCode::MalformedRecord, path.string() + ":" + std::to_string(i + 1));
    }
  }
}

void EmbeddingCache::save(const std::filesystem::path& path) const {
  std::string out;
  {
    std::lock_guard lock(mu_);
    for (const auto& [key, v] : entries_) {
      nlohmann::ordered_json j;
      j["provider"] = key.provider;
      j["model"] = key.model;
      j["text_hash"] = key.text_hash;
      j["dims"] = v.dims();
      j["values"] = v.values;
      out += j.dump() + "\n";
    }
  }
  write_file_atomic(path, out);
}

Embedder::Embedder(std::shared_ptr<EmbeddingProvider> provider, std::shared_ptr<EmbeddingCache> cache,
                   std::size_t max_in_flight)
    : provider_(std::move(provider)), cache_(std::move(cache)), max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {}

EmbeddingVector Embedder::embed(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::EmptyText, "");
  if (!cache_) return provider_->embed(text);
  EmbeddingCache::Key key{provider_->name(), provider_->model(), sha256_hex(text)};
  if (auto hit = cache_->lookup(key); hit && (provider_->dims() == 0 || hit->dims() == provider_->dims())) {
    return *hit;
  }
  auto v = provider_->embed(text);
  cache_->insert(key, v);
  return v;
}

std::vector<EmbeddingVector> Embedder::embed_all(const std::vector<std::string>& texts) {
  return parallel_map(texts.size(), max_in_flight_, [&](std::size_t i) { return embed(texts[i]); });
}

}  // namespace argos::embedding
