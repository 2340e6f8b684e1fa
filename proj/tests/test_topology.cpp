#include <cmath>
#include <functional>
#include <string>

#include "argos/error.hpp"
#include "argos/evalkit.hpp"
#include "doctest.h"
#include "support/expect.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"

using namespace argos;
using namespace argos::evalkit;

namespace {

EmbeddingSet make_set(const std::string& label, const oracle::Matrix& rows) {
  EmbeddingSet s{label, {}};
  for (const auto& r : rows) s.vectors.push_back({r});
  return s;
}

oracle::Matrix random_rows(gen::Rng& rng, std::size_t n, std::size_t d) {
  oracle::Matrix m;
  for (std::size_t i = 0; i < n; ++i) m.push_back(rng.gaussian(d));
  return m;
}

using RowMap = std::function<std::vector<double>(const std::vector<double>&)>;

oracle::Matrix map_rows(const oracle::Matrix& m, const RowMap& f) {
  oracle::Matrix out;
  for (const auto& r : m) out.push_back(f(r));
  return out;
}

/// Points +-scale_i * e_i: centered, with singular values proportional to the scales.
oracle::Matrix axis_cross(const std::vector<double>& scales) {
  oracle::Matrix m;
  const std::size_t d = scales.size();
  for (std::size_t i = 0; i < d; ++i) {
    for (double sign : {1.0, -1.0}) {
      std::vector<double> r(d, 0.0);
      r[i] = sign * scales[i];
      m.push_back(r);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("metrics agree with the naive oracles on random sets") {
  gen::Rng rng(101);
  for (int round = 0; round < 100; ++round) {
    const auto n = static_cast<std::size_t>(rng.integer(3, 10));
    const auto d = static_cast<std::size_t>(rng.integer(2, 8));
    auto x = random_rows(rng, n, d);
    auto anchor = random_rows(rng, static_cast<std::size_t>(rng.integer(1, 10)), d);
    auto other = random_rows(rng, static_cast<std::size_t>(rng.integer(2, 10)), d);
    auto seeds = random_rows(rng, n, d);
    auto set = make_set("x", x);
    auto anchor_set = make_set("anchor", anchor);
    const int p = rng.integer(1, static_cast<int>(d));

    CHECK(effective_rank(set) == doctest::Approx(oracle::effective_rank(x)).epsilon(1e-9));
    CHECK(centroid_shift(set, anchor_set) == doctest::Approx(oracle::shift(x, anchor)).epsilon(1e-9));
    CHECK(diversity(set) == doctest::Approx(oracle::diversity(x)).epsilon(1e-9));
    auto c = cse(set, anchor_set);
    REQUIRE(c.has_value());
    CHECK(*c == doctest::Approx(oracle::diversity(x) / oracle::shift(x, anchor)).epsilon(1e-9));

    std::vector<EmbeddingVector> seed_vecs;
    for (const auto& s : seeds) seed_vecs.push_back({s});
    CHECK(directional_similarity(set, seed_vecs) ==
          doctest::Approx(oracle::directional_similarity(x, seeds)).epsilon(1e-9));
    oracle::Matrix one_seed(n, seeds.front());
    CHECK(directional_similarity(set, seed_vecs.front()) ==
          doctest::Approx(oracle::directional_similarity(x, one_seed)).epsilon(1e-9));

    std::vector<EmbeddingSet> sets{set, make_set("other", other)};
    CHECK(aligned_variance(sets, "x", p) ==
          doctest::Approx(oracle::aligned_variance({x, other}, 0, p)).epsilon(1e-9));
    CHECK(aligned_variance(sets, "other", p) ==
          doctest::Approx(oracle::aligned_variance({x, other}, 1, p)).epsilon(1e-9));
  }
}

TEST_CASE("effective rank anchors") {
  for (std::size_t n = 1; n <= 6; ++n) {
    CHECK(effective_rank(make_set("eq", axis_cross(std::vector<double>(n, 1.5)))) ==
          doctest::Approx(static_cast<double>(n)).epsilon(1e-9));
  }
  CHECK(effective_rank(make_set("s", axis_cross({2, 1, 1}))) == doctest::Approx(2.8284271247).epsilon(1e-9));
  CHECK(effective_rank(make_set("line", {{0, 0}, {1, 1}, {3, 3}})) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_ERROR(effective_rank(make_set("one", {{1, 2}})), ErrorCode::TooFewVectors);
  CHECK_ERROR(effective_rank(make_set("same", {{1, 2}, {1, 2}, {1, 2}})), ErrorCode::DegenerateSet);
}

TEST_CASE("shift, diversity and cse anchors") {
  auto origin = make_set("a", {{0, 0}});
  CHECK(centroid_shift(make_set("b", {{3, 4}}), origin) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(diversity(make_set("tri", {{0, 0}, {1, 0}, {0, 1}})) == doctest::Approx(1.1380711875).epsilon(1e-9));
  CHECK_ERROR(diversity(make_set("one", {{0, 0}})), ErrorCode::TooFewVectors);

  CHECK(cse(make_set("b", {{0, 0}, {2, 0}}), origin) == doctest::Approx(2.0));
  CHECK(cse(make_set("b", {{1, 0}, {1, 0}}), origin) == doctest::Approx(0.0));
  CHECK_FALSE(cse(make_set("b", {{-1, 0}, {1, 0}}), origin).has_value());
  CHECK_FALSE(cse(make_set("b", {{5e-7, 0}, {5e-7, 1e-7}}), origin).has_value());
  CHECK(cse(make_set("b", {{5e-7, 0}, {5e-7, 1e-7}}), origin, 1e-9).has_value());
}

TEST_CASE("directional similarity anchors") {
  EmbeddingVector seed{{1, 1}};
  CHECK(directional_similarity(make_set("anti", {{2, 1}, {0, 1}}), seed) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(directional_similarity(make_set("par", {{2, 1}, {4, 1}}), seed) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(directional_similarity(make_set("orth", {{2, 1}, {1, 2}}), seed)) < 1e-12);

  std::size_t excluded = 9;
  CHECK(directional_similarity(make_set("skip", {{1, 1}, {2, 1}, {3, 1}}), seed, &excluded) == doctest::Approx(1.0));
  CHECK(excluded == 1);
  CHECK_ERROR(directional_similarity(make_set("few", {{1, 1}, {2, 1}}), seed), ErrorCode::TooFewVectors);
  CHECK_ERROR(directional_similarity(make_set("x", {{1, 1}}), std::vector<EmbeddingVector>{}),
              ErrorCode::InvalidArgument);
}

TEST_CASE("aligned variance anchors") {
  // Pooled spread lies on the x axis; the target has sample variance 2 along it.
  auto target = make_set("t", {{-1, 0}, {1, 0}});
  auto other = make_set("o", {{-3, 0}, {3, 0}});
  CHECK(aligned_variance({target, other}, "t", 32) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(aligned_variance({target, other}, "t", 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(aligned_variance({make_set("t", {{1, 1}}), other}, "t") == 0.0);
  CHECK(aligned_variance({make_set("t", {{1, 1}, {1, 1}}), make_set("o", {{1, 1}})}, "t") == 0.0);
  CHECK_ERROR(aligned_variance({target}, "missing"), ErrorCode::InvalidArgument);
  CHECK_ERROR(aligned_variance({target}, "t", 0), ErrorCode::InvalidArgument);
}

TEST_CASE("invariances") {
  gen::Rng rng(202);
  for (int round = 0; round < 30; ++round) {
    const auto d = static_cast<std::size_t>(rng.integer(2, 6));
    auto x = random_rows(rng, static_cast<std::size_t>(rng.integer(3, 9)), d);
    auto anchor = random_rows(rng, 4, d);
    auto q = rng.orthogonal(d);
    auto t = rng.gaussian(d);
    const double scale = rng.uniform(0.1, 10.0);

    auto rotate = [&](const std::vector<double>& r) { return gen::apply(q, EmbeddingVector{r}).values; };
    auto translate = [&](const std::vector<double>& r) {
      auto o = r;
      for (std::size_t k = 0; k < d; ++k) o[k] += t[k];
      return o;
    };
    auto stretch = [&](const std::vector<double>& r) {
      auto o = r;
      for (double& v : o) v *= scale;
      return o;
    };

    auto base = make_set("x", x);
    auto base_anchor = make_set("a", anchor);
    const double er = effective_rank(base);
    const double div = diversity(base);
    const double sh = centroid_shift(base, base_anchor);
    const double c = *cse(base, base_anchor);

    for (const RowMap& f : {RowMap(rotate), RowMap(translate)}) {
      auto xs = make_set("x", map_rows(x, f));
      auto as = make_set("a", map_rows(anchor, f));
      CHECK(effective_rank(xs) == doctest::Approx(er).epsilon(1e-9));
      CHECK(diversity(xs) == doctest::Approx(div).epsilon(1e-9));
      CHECK(centroid_shift(xs, as) == doctest::Approx(sh).epsilon(1e-9));
    }
    auto xs = make_set("x", map_rows(x, stretch));
    auto as = make_set("a", map_rows(anchor, stretch));
    CHECK(effective_rank(xs) == doctest::Approx(er).epsilon(1e-9));
    CHECK(diversity(xs) == doctest::Approx(div * scale).epsilon(1e-9));
    CHECK(*cse(xs, as) == doctest::Approx(c).epsilon(1e-9));
  }
}
