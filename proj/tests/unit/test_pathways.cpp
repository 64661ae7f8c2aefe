#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "lexdiff/error.hpp"
#include "lexdiff/pathways.hpp"
#include "lexdiff/rng.hpp"
#include "oracles.hpp"

using namespace lexdiff;

TEST_CASE("Kendall tau-b") {
  std::vector<double> x{1, 2, 3}, y{1, 3, 2};
  CHECK(kendall_tau_b(x, y) == doctest::Approx(1.0 / 3.0));
  CHECK(kendall_tau_b(x, x) == 1.0);
  std::vector<double> c{5, 5, 5};
  CHECK(kendall_tau_b(x, c) == 0.0);
}

TEST_CASE("zero-inflated tau: worked cases") {
  std::vector<double> a{0, 0, 1, 2};
  CHECK(zero_inflated_tau(a, a) == doctest::Approx(0.75));

  std::vector<double> pos_u{1, 4, 2, 8, 5}, pos_v{3, 1, 2, 9, 9};
  CHECK(zero_inflated_tau(pos_u, pos_v) == kendall_tau_b(pos_u, pos_v));

  std::vector<double> zeros(5, 0.0);
  CHECK(zero_inflated_tau(zeros, pos_v) == 0.0);
  CHECK_THROWS_AS(zero_inflated_tau(a, pos_v), InputError);
}

TEST_CASE("zero-inflated tau matches brute-force pair counting") {
  CounterRng rng(2024);
  const double palette[] = {0.0, 0.0, 0.5, 1.0, 2.0, 3.0, 0.25};
  std::size_t cases = 0;
  for (std::size_t n = 2; n <= 12; ++n) {
    for (int rep = 0; rep < 3000; ++rep) {
      std::vector<double> u(n), v(n);
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = palette[rng.below(7)];
        v[i] = rep % 3 == 0 ? rng.uniform() * (rng.below(2) ? 1.0 : 0.0) : palette[rng.below(7)];
      }
      REQUIRE(zero_inflated_tau(u, v) == oracle::zero_inflated_tau(u, v));
      REQUIRE(kendall_tau_b(u, v) == oracle::kendall_tau_b(u, v));
      ++cases;
    }
  }
  CHECK(cases == 33000);
}

TEST_CASE("Kendall tau-b on long series matches the oracle") {
  CounterRng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> u(500), v(500);
    for (std::size_t i = 0; i < 500; ++i) {
      u[i] = static_cast<double>(rng.below(20));
      v[i] = static_cast<double>(rng.below(15));
    }
    CHECK(kendall_tau_b(u, v) == oracle::kendall_tau_b(u, v));
  }
}

TEST_CASE("county and pair types") {
  CHECK(classify_county(100000) == CountyType::urban);
  CHECK(classify_county(99999) == CountyType::rural);
  CHECK(pair_type(CountyType::urban, CountyType::rural) == PairType::urban_rural);
  CHECK(pair_type(CountyType::rural, CountyType::urban) == PairType::urban_rural);
  CHECK(pair_type(CountyType::urban, CountyType::urban) == PairType::urban_urban);
  CHECK(pair_type(CountyType::rural, CountyType::rural) == PairType::rural_rural);
}

TEST_CASE("block series") {
  std::vector<std::vector<std::uint32_t>> uses{{1, 0}, {2, 4}, {0, 0}, {3, 3}, {9, 9}};
  std::vector<std::uint32_t> agents{2, 4};
  auto b = block_series(uses, agents, 2);
  CHECK(b == std::vector<double>{1.5, 1.0, 1.5, 0.75});
  auto one = block_series(uses, agents, 10);
  CHECK(one == std::vector<double>{7.5, 4.0});
}

TEST_CASE("pathway construction") {
  const std::vector<CountyType> types{CountyType::urban, CountyType::rural, CountyType::rural};
  SUBCASE("delayed copy gives tau 1, edge floor and self pairs respected") {
    CounterRng rng(8);
    SpatialTimeSeries ts;
    ts.num_counties = 3;
    for (int seg = 0; seg < 3; ++seg) {
      const std::size_t blocks = 12;
      std::vector<double> s(blocks * 3);
      for (std::size_t t = 0; t < blocks; ++t) {
        s[t * 3 + 0] = 1.0 + rng.uniform();
        s[t * 3 + 2] = rng.uniform() < 0.5 ? 0.0 : rng.uniform();
      }
      s[1] = 0.5;
      for (std::size_t t = 1; t < blocks; ++t) s[t * 3 + 1] = s[(t - 1) * 3 + 0];
      ts.segments.push_back(s);
    }
    std::unordered_map<std::uint64_t, std::uint32_t> edges{{0 * 3 + 1, 10}, {0 * 3 + 2, 9}, {1 * 3 + 1, 50},
                                                           {2 * 3 + 0, 12}};
    auto m = build_pathways(ts, edges, types);
    REQUIRE(m.pathways.size() == 2);
    const Pathway* p01 = m.find(0, 1);
    REQUIRE(p01 != nullptr);
    CHECK(p01->tau == 1.0);
    CHECK(p01->edge_count == 10);
    CHECK(p01->type == PairType::urban_rural);
    CHECK(m.find(0, 2) == nullptr);
    CHECK(m.find(1, 1) == nullptr);
    CHECK(m.find(2, 0) != nullptr);
  }
  SUBCASE("independent noise stays near zero") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      CounterRng rng(seed);
      SpatialTimeSeries ts;
      ts.num_counties = 2;
      std::vector<double> s(2 * 200);
      for (double& x : s) x = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
      ts.segments.push_back(s);
      auto m = build_pathways(ts, {{1, 20}}, std::vector<CountyType>{CountyType::rural, CountyType::rural});
      REQUIRE(m.pathways.size() == 1);
      const double bound = 3.0 / std::sqrt(199.0);
      CHECK(std::abs(m.pathways[0].tau) < bound);
      worst = std::max(worst, std::abs(m.pathways[0].tau));
    }
    CHECK(worst > 0.0);
  }
}

namespace {

PathwayMatrix matrix_of(const std::vector<double>& taus) {
  PathwayMatrix m;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    m.pathways.push_back(Pathway{static_cast<CountyIndex>(k), static_cast<CountyIndex>(k + 1), taus[k], 10,
                                 k % 2 ? PairType::urban_urban : PairType::rural_rural});
  }
  return m;
}

}  // namespace

TEST_CASE("pathway likelihood") {
  CHECK(pathway_likelihood(matrix_of({0.5, 0.5}), matrix_of({0.75, 0.25})) ==
        doctest::Approx(0.4330127018922193).epsilon(1e-12));
  CHECK(pathway_likelihood(matrix_of({0.2, 0.2, 0.2, 0.2}), matrix_of({0.7, 0.7, 0.7, 0.7})) == doctest::Approx(0.25));

  auto e = matrix_of({0.1, 0.3, 0.6});
  const double h = -(0.1 * std::log(0.1) + 0.3 * std::log(0.3) + 0.6 * std::log(0.6));
  CHECK(pathway_likelihood(e, e) == doctest::Approx(std::exp(-h)));

  // Negative strengths are floored rather than producing NaN.
  const double clamped = pathway_likelihood(matrix_of({0.5, -0.2}), matrix_of({-0.1, 0.5}));
  CHECK(std::isfinite(clamped));
  CHECK(clamped > 0.0);

  auto by_type = pathway_likelihood(matrix_of({0.5, 0.5, 0.5}), matrix_of({0.5, 0.1, 0.5}), PairType::rural_rural);
  REQUIRE(by_type.has_value());
  CHECK(*by_type == doctest::Approx(0.5));
  CHECK_FALSE(pathway_likelihood(matrix_of({0.5}), matrix_of({0.5}), PairType::urban_rural).has_value());

  PathwayMatrix disjoint;
  disjoint.pathways.push_back(Pathway{7, 8, 0.3, 10, PairType::urban_rural});
  CHECK_THROWS_AS(pathway_likelihood(e, disjoint), InputError);
}

TEST_CASE("pathway likelihood: Gibbs bound") {
  CounterRng rng(55);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(30);
    std::vector<double> te(n), tm(n);
    for (std::size_t k = 0; k < n; ++k) {
      te[k] = rng.uniform() * 2.0 - 0.5;
      tm[k] = te[k] + 0.3 * rng.normal();
    }
    auto e = matrix_of(te);
    const double self = pathway_likelihood(e, e);
    const double other = pathway_likelihood(e, matrix_of(tm));
    REQUIRE(other <= self * (1.0 + 1e-12));
  }
}
