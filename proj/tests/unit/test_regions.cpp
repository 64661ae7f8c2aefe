#include <cmath>

#include "doctest.h"
#include "lexdiff/error.hpp"
#include "lexdiff/regions.hpp"
#include "lexdiff/rng.hpp"

using namespace lexdiff;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("rank-one matrix: one component explains everything") {
  CounterRng rng(1);
  std::vector<double> base(15);
  for (double& v : base) v = rng.uniform();
  std::vector<std::vector<double>> m;
  for (int w = 0; w < 8; ++w) {
    const double c = 0.5 + w;
    std::vector<double> row;
    for (double v : base) row.push_back(c * v);
    m.push_back(row);
  }
  auto pr = principal_regions(m, 5);
  REQUIRE(pr.loadings.size() == 1);
  CHECK(pr.explained_variance_ratio[0] == doctest::Approx(1.0));
  CHECK_FALSE(pr.warnings.empty());
}

TEST_CASE("two orthogonal regions are recovered") {
  CounterRng rng(2);
  std::vector<double> a(20, 0.0), b(20, 0.0);
  for (int i = 0; i < 10; ++i) a[i] = 1.0 / std::sqrt(10.0);
  for (int i = 10; i < 20; ++i) b[i] = 1.0 / std::sqrt(10.0);
  std::vector<std::vector<double>> m;
  for (int w = 0; w < 30; ++w) {
    const double ca = rng.normal() * 3.0, cb = rng.normal();
    std::vector<double> row(20);
    for (int i = 0; i < 20; ++i) row[i] = ca * a[i] + cb * b[i];
    m.push_back(row);
  }
  auto pr = principal_regions(m, 5);
  REQUIRE(pr.loadings.size() == 2);
  for (const auto& region : {a, b}) {
    const double p0 = dot(region, pr.loadings[0]), p1 = dot(region, pr.loadings[1]);
    CHECK(p0 * p0 + p1 * p1 == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("loadings orthonormal, variance ordered, sign convention") {
  CounterRng rng(3);
  std::vector<std::vector<double>> m(40, std::vector<double>(25));
  for (auto& row : m) {
    for (double& v : row) v = rng.normal();
  }
  auto pr = principal_regions(m, 5);
  REQUIRE(pr.loadings.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(std::abs(dot(pr.loadings[i], pr.loadings[j]) - (i == j ? 1.0 : 0.0)) < 1e-9);
    }
    double big = 0.0;
    for (double v : pr.loadings[i]) {
      if (std::abs(v) > std::abs(big)) big = v;
    }
    CHECK(big > 0.0);
    if (i > 0) CHECK(pr.explained_variance_ratio[i] <= pr.explained_variance_ratio[i - 1]);
  }
  CHECK(pr.warnings.empty());
  CHECK_THROWS_AS(principal_regions({}, 5), InputError);
  CHECK_THROWS_AS(principal_regions({{1.0, 2.0}, {1.0}}, 1), InputError);
}
