#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lexdiff/error.hpp"
#include "lexdiff/rng.hpp"
#include "lexdiff/spatial.hpp"

using namespace lexdiff;

namespace {

CountyAssignment counties_with(std::vector<std::uint32_t> agents) {
  std::vector<County> counties;
  std::vector<CountyIndex> assign;
  for (std::size_t c = 0; c < agents.size(); ++c) {
    counties.push_back(County{std::to_string(1000 + c), 40.0, -90.0 + static_cast<double>(c), 0});
    for (std::uint32_t a = 0; a < agents[c]; ++a) assign.push_back(static_cast<CountyIndex>(c));
  }
  return CountyAssignment(counties, assign);
}

std::vector<County> line_of(std::size_t n) {
  std::vector<County> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(County{std::to_string(i), 0.0, static_cast<double>(i) * 0.1, 0});
  return out;
}

std::vector<double> random_vector(CounterRng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

// Rows: {0,1,2} {0,1,2} {1,2,3} {2,3,4} {2,3,4}, each weight 1/3.
SpatialWeights toy_weights() {
  std::vector<std::uint32_t> nb{0, 1, 2, 0, 1, 2, 1, 2, 3, 2, 3, 4, 2, 3, 4};
  return SpatialWeights(5, 3, nb, std::vector<double>(15, 1.0 / 3.0), true);
}

}  // namespace

TEST_CASE("aggregate") {
  auto counties = counties_with({5, 3, 3, 0});
  auto agg = aggregate(std::vector<double>{10, 3, 9, 4}, counties, true);
  CHECK(agg.distribution.counties == std::vector<CountyIndex>{0, 1, 2});
  CHECK(agg.distribution.values == std::vector<double>{2.0, 1.0, 3.0});
  CHECK(agg.excluded == std::vector<CountyIndex>{3});

  auto raw = aggregate(std::vector<double>{0, 3, 9, 4}, counties, false);
  CHECK(raw.distribution.values == std::vector<double>{0.0, 3.0, 9.0});

  std::vector<std::string> records{"1000", "1001", "1001", "9999"};
  auto rec = aggregate_records(records, counties, false);
  CHECK(rec.distribution.values == std::vector<double>{1.0, 2.0, 0.0});
  CHECK(rec.rejected == std::vector<std::string>{"9999"});
  CHECK_THROWS_AS(aggregate(std::vector<double>{1, 2}, counties, true), InputError);
}

TEST_CASE("k-nearest-neighbour weights") {
  auto w = knn_weights(line_of(10), 3);
  CHECK(w.k() == 3);
  CHECK(w.self_included());
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(w.neighbors(i)[0] == i);
    double sum = 0.0;
    for (double x : w.weights(i)) sum += x;
    CHECK(sum == doctest::Approx(1.0));
  }
  CHECK(w.neighbors(0)[1] == 1);
  CHECK(w.neighbors(0)[2] == 2);
  CHECK(w.neighbors(9)[1] == 8);

  auto capped = knn_weights(line_of(4), 25);
  CHECK(capped.k() == 4);
  auto excl = knn_weights(line_of(4), 2, false);
  CHECK(excl.neighbors(0)[0] == 1);
  CHECK(great_circle_km(0, 0, 0, 1) == doctest::Approx(111.195).epsilon(1e-4));
  CHECK_THROWS_AS(SpatialWeights(2, 1, {0, 1}, {0.5, 1.0}, true), InputError);
}

TEST_CASE("Getis-Ord G* smoothing") {
  SUBCASE("single hot county on a line") {
    auto w = knn_weights(line_of(10), 3);
    SpatialDistribution d;
    d.values.assign(10, 1.0);
    d.values[4] = 10.0;
    d.counties.resize(10);
    std::iota(d.counties.begin(), d.counties.end(), 0u);
    auto z = getis_ord_smooth(d, w);
    CHECK(z.smoothed);
    CHECK_FALSE(z.degenerate);
    const double hot = 1.5275252316519465, cold = -0.654653670707977;
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(z.values[i] == doctest::Approx((i >= 3 && i <= 5) ? hot : cold).epsilon(1e-12));
    }
  }
  SUBCASE("constant map is degenerate") {
    SpatialDistribution d;
    d.values.assign(6, 2.5);
    d.counties = {0, 1, 2, 3, 4, 5};
    auto z = getis_ord_smooth(d, knn_weights(line_of(6), 3));
    CHECK(z.degenerate);
    for (double v : z.values) CHECK(v == 0.0);
  }
  SUBCASE("a window over every county is degenerate") {
    SpatialDistribution d;
    d.values = {1, 5, 2, 8, 3, 4};
    d.counties = {0, 1, 2, 3, 4, 5};
    auto z = getis_ord_smooth(d, knn_weights(line_of(6), 6));
    CHECK(z.degenerate);
    for (double v : z.values) CHECK(v == 0.0);
  }
  SUBCASE("shift invariance and zero mean under uniform rows") {
    CounterRng rng(4);
    auto x = random_vector(rng, 12);
    auto w = knn_weights(line_of(12), 5);
    auto a = *getis_ord(x, w);
    for (double& v : x) v += 7.0;
    auto b = *getis_ord(x, w);
    for (std::size_t i = 0; i < 12; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));

    // Equator ring: every county is in exactly five neighbourhoods, so the
    // weights are doubly stochastic.
    std::vector<County> ring;
    for (int i = 0; i < 12; ++i) ring.push_back(County{std::to_string(i), 0.0, -180.0 + 30.0 * i, 0});
    auto u = *getis_ord(x, knn_weights(ring, 5));
    CHECK(std::abs(std::accumulate(u.begin(), u.end(), 0.0)) < 1e-9);

    auto full = *getis_ord(x, knn_weights(line_of(12), 12));
    for (double v : full) CHECK(v == 0.0);
  }
}

TEST_CASE("Lee's L") {
  CounterRng rng(77);
  SUBCASE("identity weights reduce to Pearson") {
    for (int t = 0; t < 1000; ++t) {
      const std::size_t n = 3 + rng.below(40);
      auto x = random_vector(rng, n), y = random_vector(rng, n);
      auto w = SpatialWeights::identity(n);
      REQUIRE(std::abs(*lees_l(x, y, w) - *pearson(x, y)) <= 1e-9);
    }
    std::vector<double> x{1, 2, 3, 4}, y{-1, -2, -3, -4};
    CHECK(*lees_l(x, y, SpatialWeights::identity(4)) == doctest::Approx(-1.0));
  }
  SUBCASE("toy map against an independent evaluation") {
    std::vector<double> x{3, 1, 4, 1, 5}, y{2, 7, 1, 8, 2};
    const auto w = toy_weights();
    CHECK(*lees_l(x, x, w) == doctest::Approx(0.09722222222222224).epsilon(1e-12));
    CHECK(*lees_l(x, y, w) == doctest::Approx(-0.05367176572662754).epsilon(1e-12));
  }
  SUBCASE("symmetric, affine invariant, in (0,1] on the diagonal") {
    auto w = knn_weights(line_of(30), 6);
    for (int t = 0; t < 50; ++t) {
      auto x = random_vector(rng, 30), y = random_vector(rng, 30);
      const double l = *lees_l(x, y, w);
      CHECK(*lees_l(y, x, w) == doctest::Approx(l).epsilon(1e-12));
      auto xs = x;
      for (double& v : xs) v = 3.5 * v - 2.0;
      CHECK(*lees_l(xs, y, w) == doctest::Approx(l).epsilon(1e-9));
      const double self = *lees_l(x, x, w);
      CHECK(self > 0.0);
      CHECK(self <= 1.0 + 1e-12);
    }
  }
  SUBCASE("constant input is undefined") {
    std::vector<double> x{1, 1, 1}, y{1, 2, 3};
    CHECK_FALSE(lees_l(x, y, SpatialWeights::identity(3)).has_value());
    CHECK_THROWS_AS(lees_l(x, std::vector<double>{1, 2}, SpatialWeights::identity(3)), InputError);
  }
}

TEST_CASE("similarity classes") {
  CHECK(classify_similarity(0.45) == Similarity::very_similar);
  CHECK(classify_similarity(0.4) == Similarity::very_similar);
  CHECK(classify_similarity(0.3999) == Similarity::broadly_similar);
  CHECK(classify_similarity(0.13) == Similarity::broadly_similar);
  CHECK(classify_similarity(0.1299) == Similarity::not_similar);
  CHECK(classify_similarity(0.0) == Similarity::not_similar);
  CHECK(classify_similarity(-0.5) == Similarity::not_similar);
  CHECK(to_string(Similarity::broadly_similar) == "broadly_similar");
}
