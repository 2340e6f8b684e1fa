#include <cmath>
#include <memory>

#include "argos/embedding.hpp"
#include "argos/error.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support/expect.hpp"
#include "support/fake_transport.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace argos;
using namespace argos::embedding;

TEST_CASE("cosine on small vectors") {
  CHECK(cosine({{1, 0}}, {{1, 0}}) == 1.0);
  CHECK(cosine({{1, 0}}, {{0, 1}}) == 0.0);
  const double h = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(cosine({{h, h}}, {{1, 0}}) - 0.70710678) < 1e-8);
  CHECK_ERROR(cosine({{1, 0}}, {{1, 0, 0}}), ErrorCode::DimensionMismatch);
  CHECK_ERROR(cosine({{0, 0}}, {{1, 0}}), ErrorCode::ZeroNorm);
}

TEST_CASE("cosine is symmetric and self-similarity is one") {
  gen::Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    auto d = static_cast<std::size_t>(rng.integer(1, 16));
    auto a = rng.vector(d);
    auto b = rng.vector(d);
    CHECK(cosine(a, b) == cosine(b, a));
    CHECK(std::abs(cosine(a, a) - 1.0) < 1e-9);
    CHECK(std::abs(cosine(a, b) - oracle::cosine(a.values, b.values)) < 1e-12);
  }
}

TEST_CASE("centroid") {
  std::vector<EmbeddingVector> two{{{0, 0}}, {{2, 0}}};
  CHECK(centroid(two) == EmbeddingVector{{1, 0}});
  std::vector<EmbeddingVector> one{{{0.3, -0.7}}};
  CHECK(centroid(one) == one[0]);
  std::vector<EmbeddingVector> cross{{{1, 0}}, {{0, 1}}, {{-1, 0}}, {{0, -1}}};
  CHECK(centroid(cross) == EmbeddingVector{{0, 0}});
  CHECK_ERROR(centroid(std::vector<EmbeddingVector>{}), ErrorCode::EmptyList);
  std::vector<EmbeddingVector> mixed{{{1, 0}}, {{1, 0, 0}}};
  CHECK_ERROR(centroid(mixed), ErrorCode::DimensionMismatch);
}

TEST_CASE("mock embedding matches the reference definition") {
  MockEmbeddingProvider mock;
  gen::Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    auto text = rng.sentence(1, 12);
    if (rng.coin()) text += " Child, 2 m/s²!";
    auto v = mock.embed(text);
    auto ref = oracle::mock_embed(text);
    REQUIRE(v.dims() == 64);
    for (std::size_t k = 0; k < 64; ++k) CHECK(v.values[k] == doctest::Approx(ref[k]).epsilon(1e-12));
    CHECK(std::abs(l2_norm(v) - 1.0) < 1e-6);
  }
}

TEST_CASE("mock embedding contract") {
  MockEmbeddingProvider mock;
  CHECK(mock.embed("child") == mock.embed("child"));
  CHECK_ERROR(mock.embed(""), ErrorCode::EmptyText);
  CHECK_ERROR(mock.embed("?! --"), ErrorCode::EmptyText);
  auto a = mock.embed("child");
  auto b = mock.embed("delivery");
  CHECK(a != b);
  CHECK(std::abs(l2_norm(a) - 1.0) < 1e-6);
  CHECK(std::abs(l2_norm(b) - 1.0) < 1e-6);
  CHECK(mock.embed("Child") == mock.embed("child"));
  CHECK(MockEmbeddingProvider(8).embed("child").dims() == 8);
  CHECK(MockEmbeddingProvider::tokenize("Wet-floor, 2 m/s²") ==
        std::vector<std::string>{"wet", "floor", "2", "m", "s"});
}

TEST_CASE("frozen mock cosines") {
  // Values computed once with the reference definition and frozen here.
  MockEmbeddingProvider mock;
  auto unit = mock.embed("child courier");
  struct Case {
    const char* text;
    double expected;
  };
  const Case cases[] = {
      {"Child courier", 1.0},
      {"Courier child delivery", 0.994902},
      {"Pet Animal dog", 0.677243},
      {"Stairs steps", 0.320081},
      {"Drowsy user", -0.029116},
      {"Elderly aged person", -0.931859},
      {"Wet Floor slippery surface", -0.980370},
  };
  for (const auto& c : cases) CHECK(cosine(unit, mock.embed(c.text)) == doctest::Approx(c.expected).epsilon(1e-6));
}

TEST_CASE("embedder cache is transparent") {
  auto mock = std::make_shared<MockEmbeddingProvider>();
  auto cache = std::make_shared<EmbeddingCache>();
  Embedder cached(mock, cache, 4);
  Embedder direct(mock, nullptr, 1);
  gen::Rng rng(8);
  std::vector<std::string> texts;
  for (int i = 0; i < 40; ++i) texts.push_back(rng.sentence(1, 6));
  texts.push_back(texts.front());
  auto a = cached.embed_all(texts);
  auto b = direct.embed_all(texts);
  CHECK(a == b);
  CHECK(cache->size() <= texts.size() - 1);
  CHECK(cached.embed_all(texts) == a);
  CHECK_ERROR(cached.embed(""), ErrorCode::EmptyText);

  testing::TempDir dir;
  cache->save(dir.path() / "cache.jsonl");
  auto reloaded = std::make_shared<EmbeddingCache>();
  reloaded->load(dir.path() / "cache.jsonl");
  CHECK(reloaded->size() == cache->size());
  Embedder from_disk(mock, reloaded, 2);
  CHECK(from_disk.embed_all(texts) == a);
  reloaded->save(dir.path() / "again.jsonl");
  CHECK(testing::slurp(dir.path() / "cache.jsonl") == testing::slurp(dir.path() / "again.jsonl"));
}

TEST_CASE("cached vectors of another width are not reused") {
  auto cache = std::make_shared<EmbeddingCache>();
  Embedder wide(std::make_shared<MockEmbeddingProvider>(64), cache);
  Embedder narrow(std::make_shared<MockEmbeddingProvider>(16), cache);
  CHECK(wide.embed("child").dims() == 64);
  CHECK(narrow.embed("child").dims() == 16);
}

TEST_CASE("remote embedding provider") {
  auto ok = testing::status(200, R"({"data":[{"embedding":[3.0, 4.0]}]})");
  testing::RecordingSleeper sleeper;

  SUBCASE("normalizes the returned vector and sends model and input") {
    auto t = std::make_shared<testing::ScriptedTransport>(std::vector<http::Response>{ok});
    RemoteEmbeddingProvider p({"http://e/v1/embeddings", "bge", 0, "tok", {}}, t, sleeper.fn());
    auto v = p.embed("child");
    CHECK(v.values == std::vector<double>{0.6, 0.8});
    CHECK(p.dims() == 2);
    REQUIRE(t->requests.size() == 1);
    auto body = nlohmann::json::parse(t->requests[0].body);
    CHECK(body["model"] == "bge");
    CHECK(body["input"][0] == "child");
    CHECK(t->requests[0].token == "tok");
  }
  SUBCASE("retries transient failures, then succeeds") {
    auto t = std::make_shared<testing::ScriptedTransport>(
        std::vector<http::Response>{testing::status(429), testing::transport_failure(), ok});
    RemoteEmbeddingProvider p({"http://e", "bge", 2, "", {}}, t, sleeper.fn());
    CHECK(p.embed("child").dims() == 2);
    CHECK(t->requests.size() == 3);
    CHECK(sleeper.delays.size() == 2);
  }
  SUBCASE("gives up after the retry budget") {
    auto t = std::make_shared<testing::ScriptedTransport>(std::vector<http::Response>{testing::status(503)});
    RemoteEmbeddingProvider p({"http://e", "bge", 0, "", {}}, t, sleeper.fn());
    auto err = testing::capture_error([&] { p.embed("child"); });
    REQUIRE(err);
    CHECK(err->code() == ErrorCode::ProviderError);
    CHECK(err->status() == 503);
    CHECK(t->requests.size() == 4);
  }
  SUBCASE("client errors are not retried") {
    auto t = std::make_shared<testing::ScriptedTransport>(std::vector<http::Response>{testing::status(401)});
    RemoteEmbeddingProvider p({"http://e", "bge", 0, "", {}}, t, sleeper.fn());
    CHECK_ERROR(p.embed("child"), ErrorCode::ProviderError);
    CHECK(t->requests.size() == 1);
  }
  SUBCASE("dimension drift and bad shapes are provider errors") {
    auto t = std::make_shared<testing::ScriptedTransport>(std::vector<http::Response>{
        ok, testing::status(200, R"({"data":[{"embedding":[1,2,3]}]})"), testing::status(200, R"({"x":1})")});
    RemoteEmbeddingProvider p({"http://e", "bge", 0, "", {}}, t, sleeper.fn());
    CHECK_NOTHROW(p.embed("a"));
    CHECK_ERROR(p.embed("b"), ErrorCode::ProviderError);
    CHECK_ERROR(p.embed("c"), ErrorCode::ProviderError);
  }
}
