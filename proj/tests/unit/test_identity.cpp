#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lexdiff/error.hpp"
#include "lexdiff/identity.hpp"
#include "lexdiff/rng.hpp"

using namespace lexdiff;

namespace {

CategorySchema flat_schema(std::size_t dims) {
  std::vector<IdentityCategory> cats;
  for (std::size_t k = 0; k < dims; ++k) cats.push_back({"c" + std::to_string(k), {"r"}});
  return CategorySchema(cats);
}

WordIdentity word_with(const CategorySchema& schema, std::vector<std::uint8_t> registers) {
  WordIdentity w;
  auto cw = category_weights(registers, schema);
  w.registers = std::move(registers);
  w.category_weights = cw.categories;
  w.register_weights = cw.registers;
  return w;
}

std::vector<IdentityVector> random_population(std::size_t n, std::size_t d, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<IdentityVector> pop(n, IdentityVector(d));
  for (auto& row : pop) {
    for (double& v : row) v = rng.uniform();
  }
  return pop;
}

}  // namespace

TEST_CASE("schema layout") {
  CategorySchema s({{"politics", {"left", "right"}}, {"race", {"a", "b", "c"}}, {"lang", {"es"}}});
  CHECK(s.dimension() == 6);
  CHECK(s.offset(1) == 2);
  CHECK(s.category_size(1) == 3);
  CHECK(s.category_of(4) == 1);
  CHECK(s.category_of(5) == 2);
  CHECK(s.register_label(3) == "race/b");
  CHECK_THROWS_AS(CategorySchema(std::vector<IdentityCategory>{}), InputError);
  CHECK_THROWS_AS(CategorySchema(std::vector<IdentityCategory>{{"x", {}}}), InputError);
  CHECK_THROWS_AS(IdentityTable(s, 1, {0, 0, 0, 0, 0, 1.5}), InputError);
  CHECK_THROWS_AS(IdentityTable(s, 1, {0, 0, 0}), InputError);
}

TEST_CASE("category weights") {
  CategorySchema s({{"politics", {"l", "r"}},
                    {"race", {"a", "b", "c", "d", "e", "f"}},
                    {"lang", {"es"}},
                    {"age", {"y", "o"}}});
  SUBCASE("one active category") {
    auto w = category_weights(std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0}, s);
    CHECK(w.any_active);
    CHECK(w.categories == std::vector<double>{0, 0, 1, 0});
  }
  SUBCASE("three active categories") {
    auto w = category_weights(std::vector<std::uint8_t>{1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0}, s);
    CHECK(w.categories[0] == doctest::Approx(1.0 / 3));
    CHECK(w.categories[1] == doctest::Approx(1.0 / 3));
    CHECK(w.categories[2] == doctest::Approx(1.0 / 3));
    CHECK(w.categories[3] == 0.0);
  }
  SUBCASE("race register weight with two active categories") {
    auto w = category_weights(std::vector<std::uint8_t>{0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0}, s);
    for (std::size_t d = 2; d < 8; ++d) CHECK(w.registers[d] == doctest::Approx(0.08333333333333333));
    CHECK(w.registers[0] == doctest::Approx(0.25));
    CHECK(w.registers[1] == doctest::Approx(0.25));
  }
  SUBCASE("nothing active") {
    auto w = category_weights(std::vector<std::uint8_t>(11, 0), s);
    CHECK_FALSE(w.any_active);
    CHECK(std::accumulate(w.registers.begin(), w.registers.end(), 0.0) == 0.0);
  }
  SUBCASE("sums to one whenever anything is active") {
    CounterRng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::uint8_t> regs(11);
      for (auto& r : regs) r = static_cast<std::uint8_t>(rng.below(2));
      auto w = category_weights(regs, s);
      if (!w.any_active) continue;
      CHECK(std::accumulate(w.categories.begin(), w.categories.end(), 0.0) == doctest::Approx(1.0));
      CHECK(std::accumulate(w.registers.begin(), w.registers.end(), 0.0) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("quantile and median helpers") {
  std::vector<double> pop(100);
  for (int i = 0; i < 100; ++i) pop[i] = i / 100.0;
  CHECK(midpoint_quantile(pop, 0.90) == doctest::Approx(0.905));
  CHECK(midpoint_quantile(pop, -1.0) == 0.0);
  CHECK(midpoint_quantile(pop, 2.0) == 1.0);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("enregistering a word") {
  SUBCASE("adopters at the maximum of one register") {
    const auto schema = flat_schema(2);
    std::vector<IdentityVector> pop;
    for (int i = 0; i < 20; ++i) pop.push_back({i / 19.0, 0.5});
    std::vector<IdentityVector> adopters(10, IdentityVector{1.0, 0.5});
    auto w = enregister_word(adopters, pop, schema, 0.75);
    CHECK(w.registers == std::vector<std::uint8_t>{1, 0});
    CHECK(w.category_weights == std::vector<double>{1.0, 0.0});
    CHECK_FALSE(w.fallback);
    CHECK(w.threshold_used == 0.75);
  }
  SUBCASE("percentile grid: median 0.90 clears Q = 0.75") {
    const auto schema = flat_schema(1);
    std::vector<IdentityVector> pop;
    for (int i = 0; i < 100; ++i) pop.push_back({i / 100.0});
    std::vector<IdentityVector> adopters{{0.85}, {0.90}, {0.95}};
    auto w = enregister_word(adopters, pop, schema, 0.75);
    CHECK(w.quantiles[0] == doctest::Approx(0.905));
    CHECK(w.registers[0] == 1);
  }
  SUBCASE("adopters at the population median fall back") {
    const auto schema = flat_schema(3);
    std::vector<IdentityVector> pop;
    for (int i = 0; i <= 100; ++i) pop.push_back({i / 100.0, i / 100.0, (i / 100.0) * (i / 100.0)});
    std::vector<IdentityVector> adopters(5, IdentityVector{0.5, 0.5, 0.25});
    auto w = enregister_word(adopters, pop, schema, 0.75);
    CHECK(w.fallback);
    CHECK(w.threshold_used == doctest::Approx(0.5));
    CHECK(w.registers == std::vector<std::uint8_t>{1, 1, 1});

    adopters[0][1] = adopters[1][1] = adopters[2][1] = 0.6;
    w = enregister_word(adopters, pop, schema, 0.75);
    CHECK(w.fallback);
    CHECK(w.registers == std::vector<std::uint8_t>{0, 1, 0});
    CHECK(w.threshold_used == doctest::Approx(w.quantiles[1]));
  }
  SUBCASE("Q extremes") {
    const auto schema = flat_schema(4);
    auto pop = random_population(200, 4, 9);
    std::vector<IdentityVector> adopters(pop.begin(), pop.begin() + 10);
    auto high = enregister_word(adopters, pop, schema, 1.0 - 1e-9);
    CHECK(high.fallback);
    CHECK(high.any_active());
    auto low = enregister_word(adopters, pop, schema, 1e-9);
    CHECK_FALSE(low.fallback);
    for (std::size_t d = 0; d < 4; ++d) CHECK(low.registers[d] == (low.quantiles[d] > 1e-9 ? 1 : 0));
    CHECK_THROWS_AS(enregister_word(adopters, pop, schema, 1.0), InputError);
    CHECK_THROWS_AS(enregister_word(adopters, pop, schema, 0.0), InputError);
  }
  SUBCASE("invariant to adopter and population order") {
    const auto schema = flat_schema(5);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto pop = random_population(150, 5, seed);
      std::vector<IdentityVector> adopters(pop.begin(), pop.begin() + 10);
      auto base = enregister_word(adopters, pop, schema, 0.6);
      CounterRng rng(seed + 100);
      rng.shuffle(pop);
      rng.shuffle(adopters);
      auto perm = enregister_word(adopters, pop, schema, 0.6);
      CHECK(base.registers == perm.registers);
      CHECK(base.quantiles == perm.quantiles);
    }
  }
  SUBCASE("schema mismatch is rejected") {
    const auto schema = flat_schema(2);
    std::vector<IdentityVector> pop{{0.1, 0.2}, {0.3, 0.4}};
    std::vector<IdentityVector> bad{{0.1}};
    CHECK_THROWS_AS(enregister_word(bad, pop, schema, 0.75), InputError);
    CHECK_THROWS_AS(enregister_word(std::vector<IdentityVector>{}, pop, schema, 0.75), InputError);
  }
  SUBCASE("table overload agrees with the span overload") {
    const auto schema = flat_schema(3);
    auto pop = random_population(80, 3, 4);
    std::vector<double> flat;
    for (const auto& row : pop) flat.insert(flat.end(), row.begin(), row.end());
    IdentityTable table(schema, 80, flat);
    std::vector<AgentId> ids{3, 7, 11, 19, 40};
    std::vector<IdentityVector> adopters;
    for (AgentId a : ids) adopters.push_back(pop[a]);
    auto a = enregister_word(adopters, pop, schema, 0.7);
    auto b = enregister_word(table, ids, 0.7);
    CHECK(a.registers == b.registers);
    CHECK(a.quantiles == b.quantiles);
  }
}

TEST_CASE("similarity to the word") {
  const auto schema = flat_schema(1);
  const auto word = word_with(schema, {1});
  SUBCASE("three-agent affine log rescale") {
    std::vector<IdentityVector> pop{{1.0}, {0.5}, {0.1}};
    auto range = population_log_range(pop, word);
    CHECK(similarity_to_word(pop[0], word, range) == doctest::Approx(1.0));
    CHECK(similarity_to_word(pop[1], word, range) == doctest::Approx(0.6989700043360187).epsilon(1e-12));
    CHECK(similarity_to_word(pop[2], word, range) == doctest::Approx(0.0));
  }
  SUBCASE("identical agent scores 1, vacuous word scores 1") {
    std::vector<IdentityVector> pop{{1.0}, {0.2}, {0.7}};
    auto range = population_log_range(pop, word);
    CHECK(similarity_to_word(pop[0], word, range) == 1.0);
    const auto empty = word_with(schema, {0});
    auto erange = population_log_range(pop, empty);
    for (const auto& a : pop) CHECK(similarity_to_word(a, empty, erange) == 1.0);
  }
  SUBCASE("zero similarity is floored, not infinite") {
    std::vector<IdentityVector> pop{{1.0}, {0.0}};
    auto range = population_log_range(pop, word);
    CHECK(range.lo[0] == doctest::Approx(std::log(kSimilarityFloor)));
    CHECK(similarity_to_word(pop[1], word, range) == 0.0);
  }
  SUBCASE("bounded and monotone with the reference set fixed") {
    const auto s3 = flat_schema(3);
    const auto w3 = word_with(s3, {1, 0, 1});
    auto pop = random_population(100, 3, 21);
    auto range = population_log_range(pop, w3);
    CounterRng rng(5);
    for (const auto& agent : pop) {
      const double base = similarity_to_word(agent, w3, range);
      REQUIRE(base >= 0.0);
      REQUIRE(base <= 1.0);
      // Move one weighted coordinate towards the word's register value (1).
      auto closer = agent;
      closer[0] = closer[0] + (1.0 - closer[0]) * rng.uniform();
      CHECK(similarity_to_word(closer, w3, range) >= base);
    }
  }
  SUBCASE("table path matches span path") {
    auto pop = random_population(30, 1, 8);
    std::vector<double> flat;
    for (const auto& row : pop) flat.push_back(row[0]);
    IdentityTable table(schema, 30, flat);
    auto deltas = word_similarities(table, word);
    auto range = population_log_range(pop, word);
    for (std::size_t a = 0; a < 30; ++a) CHECK(deltas[a] == similarity_to_word(pop[a], word, range));
    CHECK(*std::max_element(deltas.begin(), deltas.end()) == 1.0);
  }
}

TEST_CASE("similarity between neighbours") {
  const auto schema = flat_schema(1);
  const auto word = word_with(schema, {1});
  SUBCASE("two in-neighbours at 0.9 and 0.3") {
    IdentityTable table(schema, 3, {0.0, 0.1, 0.7});
    auto g = SocialGraph::from_edges(3, {Edge{1, 0}, Edge{2, 0}});
    auto deltas = neighbor_similarities(table, g, word);
    REQUIRE(deltas.size() == 2);
    CHECK(g.edges()[0].source == 1);
    CHECK(deltas[0] == doctest::Approx(1.0));
    CHECK(deltas[1] == doctest::Approx(0.0));
  }
  SUBCASE("singleton in-neighbourhood") {
    IdentityTable table(schema, 2, {0.0, 1.0});
    auto g = SocialGraph::from_edges(2, {Edge{1, 0}});
    CHECK(neighbor_similarities(table, g, word)[0] == 1.0);
  }
  SUBCASE("identical neighbour scores 1") {
    IdentityTable table(schema, 3, {0.4, 0.4, 0.9});
    auto g = SocialGraph::from_edges(3, {Edge{1, 0}, Edge{2, 0}});
    CHECK(neighbor_similarities(table, g, word)[0] == 1.0);
  }
  SUBCASE("bounded on random graphs") {
    const auto s3 = flat_schema(3);
    const auto w3 = word_with(s3, {1, 1, 0});
    auto pop = random_population(50, 3, 2);
    std::vector<double> flat;
    for (const auto& row : pop) flat.insert(flat.end(), row.begin(), row.end());
    IdentityTable table(s3, 50, flat);
    std::vector<Edge> edges;
    for (AgentId s = 0; s < 50; ++s) {
      for (AgentId t = 0; t < 50; ++t) {
        if (s != t && (s * 7 + t * 3) % 5 == 0) edges.push_back(Edge{s, t});
      }
    }
    auto g = SocialGraph::from_edges(50, edges);
    for (double d : neighbor_similarities(table, g, w3)) {
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
    }
  }
}
