#include "lexdiff/identity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lexdiff/error.hpp"

namespace lexdiff {

CategorySchema::CategorySchema(std::vector<IdentityCategory> categories) : categories_(std::move(categories)) {
  if (categories_.empty()) throw InputError("identity schema needs at least one category");
  offsets_.reserve(categories_.size() + 1);
  offsets_.push_back(0);
  for (const auto& c : categories_) {
    if (c.registers.empty()) throw InputError("identity category '" + c.name + "' has no registers");
    offsets_.push_back(offsets_.back() + c.registers.size());
  }
}

std::size_t CategorySchema::category_of(std::size_t dim) const {
  if (dim >= dimension()) throw InputError("dimension out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), dim);
  return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

std::string CategorySchema::register_label(std::size_t dim) const {
  const std::size_t k = category_of(dim);
  return categories_[k].name + "/" + categories_[k].registers[dim - offsets_[k]];
}

bool CategorySchema::names_equal(const CategorySchema& other) const {
  if (categories_.size() != other.categories_.size()) return false;
  for (std::size_t k = 0; k < categories_.size(); ++k) {
    if (categories_[k].name != other.categories_[k].name ||
        categories_[k].registers != other.categories_[k].registers) {
      return false;
    }
  }
  return true;
}

IdentityTable::IdentityTable(CategorySchema schema, std::size_t num_agents, std::vector<double> values)
    : schema_(std::move(schema)), num_agents_(num_agents), values_(std::move(values)) {
  const std::size_t d = schema_.dimension();
  if (values_.size() != num_agents_ * d) {
    throw InputError("identity table holds " + std::to_string(values_.size()) + " values, expected " +
                     std::to_string(num_agents_ * d));
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("identity value outside [0,1]");
  }
  sorted_.resize(values_.size());
  for (std::size_t dim = 0; dim < d; ++dim) {
    auto column = std::span<double>(sorted_).subspan(dim * num_agents_, num_agents_);
    for (std::size_t a = 0; a < num_agents_; ++a) column[a] = values_[a * d + dim];
    std::sort(column.begin(), column.end());
  }
}

bool WordIdentity::any_active() const noexcept {
  return std::any_of(registers.begin(), registers.end(), [](std::uint8_t r) { return r != 0; });
}

CategoryWeights category_weights(std::span<const std::uint8_t> registers, const CategorySchema& schema) {
  if (registers.size() != schema.dimension()) throw InputError("register vector does not match schema");
  CategoryWeights out;
  out.categories.assign(schema.num_categories(), 0.0);
  out.registers.assign(schema.dimension(), 0.0);
  std::size_t active = 0;
  for (std::size_t k = 0; k < schema.num_categories(); ++k) {
    for (std::size_t m = schema.offset(k); m < schema.offset(k + 1); ++m) {
      if (registers[m] != 0) {
        out.categories[k] = 1.0;
        ++active;
        break;
      }
    }
  }
  if (active == 0) return out;
  out.any_active = true;
  for (std::size_t k = 0; k < schema.num_categories(); ++k) {
    if (out.categories[k] == 0.0) continue;
    out.categories[k] = 1.0 / static_cast<double>(active);
    const double per_register = out.categories[k] / static_cast<double>(schema.category_size(k));
    for (std::size_t m = schema.offset(k); m < schema.offset(k + 1); ++m) out.registers[m] = per_register;
  }
  return out;
}

double midpoint_quantile(std::span<const double> sorted_population, double value) {
  if (sorted_population.empty()) throw InputError("quantile of an empty population");
  const auto lower = std::lower_bound(sorted_population.begin(), sorted_population.end(), value);
  const auto upper = std::upper_bound(lower, sorted_population.end(), value);
  const double below = static_cast<double>(lower - sorted_population.begin());
  const double equal = static_cast<double>(upper - lower);
  return (below + 0.5 * equal) / static_cast<double>(sorted_population.size());
}

double median(std::vector<double> values) {
  if (values.empty()) throw InputError("median of an empty list");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

namespace {

void check_threshold(double q) {
  if (!(q > 0.0 && q < 1.0)) throw InputError("enregisterment threshold Q must lie in (0,1)");
}

// quantiles[m] -> registers, with the fallback when nothing clears q.
WordIdentity finish_enregisterment(std::vector<double> quantiles, const CategorySchema& schema, double q) {
  WordIdentity word;
  word.quantiles = std::move(quantiles);
  word.registers.assign(schema.dimension(), 0);
  word.threshold_used = q;
  for (std::size_t m = 0; m < word.quantiles.size(); ++m) word.registers[m] = word.quantiles[m] > q ? 1 : 0;
  if (!word.any_active()) {
    const double top = *std::max_element(word.quantiles.begin(), word.quantiles.end());
    word.fallback = true;
    word.threshold_used = top;
    for (std::size_t m = 0; m < word.quantiles.size(); ++m) word.registers[m] = word.quantiles[m] >= top ? 1 : 0;
  }
  auto weights = category_weights(word.registers, schema);
  word.category_weights = std::move(weights.categories);
  word.register_weights = std::move(weights.registers);
  return word;
}

}  // namespace

WordIdentity enregister_word(std::span<const IdentityVector> adopters, std::span<const IdentityVector> population,
                             const CategorySchema& schema, double q) {
  check_threshold(q);
  if (adopters.empty()) throw InputError("enregisterment needs at least one adopter");
  if (population.empty()) throw InputError("enregisterment needs a nonempty population");
  const std::size_t d = schema.dimension();
  for (const auto& v : adopters) {
    if (v.size() != d) throw InputError("adopter identity has " + std::to_string(v.size()) + " dimensions, schema has " + std::to_string(d));
  }
  for (const auto& v : population) {
    if (v.size() != d) throw InputError("population identity has " + std::to_string(v.size()) + " dimensions, schema has " + std::to_string(d));
  }
  std::vector<double> quantiles(d);
  std::vector<double> column(population.size());
  std::vector<double> adopter_values(adopters.size());
  for (std::size_t m = 0; m < d; ++m) {
    for (std::size_t a = 0; a < population.size(); ++a) column[a] = population[a][m];
    std::sort(column.begin(), column.end());
    for (std::size_t a = 0; a < adopters.size(); ++a) adopter_values[a] = adopters[a][m];
    quantiles[m] = midpoint_quantile(column, median(adopter_values));
  }
  return finish_enregisterment(std::move(quantiles), schema, q);
}

WordIdentity enregister_word(const IdentityTable& population, std::span<const AgentId> adopters, double q) {
  check_threshold(q);
  if (adopters.empty()) throw InputError("enregisterment needs at least one adopter");
  if (population.num_agents() == 0) throw InputError("enregisterment needs a nonempty population");
  const std::size_t d = population.dimension();
  std::vector<double> quantiles(d);
  std::vector<double> adopter_values(adopters.size());
  for (std::size_t m = 0; m < d; ++m) {
    for (std::size_t a = 0; a < adopters.size(); ++a) {
      if (adopters[a] >= population.num_agents()) throw InputError("adopter id out of range");
      adopter_values[a] = population.row(adopters[a])[m];
    }
    quantiles[m] = midpoint_quantile(population.sorted_column(m), median(adopter_values));
  }
  return finish_enregisterment(std::move(quantiles), population.schema(), q);
}

double log_similarity(double a, double b) noexcept {
  return std::log(std::max(1.0 - std::fabs(a - b), kSimilarityFloor));
}

double rescale_log_similarity(double value, double lo, double hi) noexcept {
  if (!(hi > lo)) return 1.0;
  return std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
}

namespace {

LogSimilarityRange empty_range(std::size_t d) {
  LogSimilarityRange r;
  r.lo.assign(d, std::numeric_limits<double>::infinity());
  r.hi.assign(d, -std::numeric_limits<double>::infinity());
  return r;
}

void widen(LogSimilarityRange& range, const WordIdentity& word, std::span<const double> a, std::span<const double> b) {
  for (std::size_t m = 0; m < word.register_weights.size(); ++m) {
    if (word.register_weights[m] == 0.0) continue;
    const double s = log_similarity(a[m], b[m]);
    range.lo[m] = std::min(range.lo[m], s);
    range.hi[m] = std::max(range.hi[m], s);
  }
}

void settle(LogSimilarityRange& range) {
  for (std::size_t m = 0; m < range.lo.size(); ++m) {
    if (range.lo[m] > range.hi[m]) range.lo[m] = range.hi[m] = 0.0;
  }
}

std::vector<double> register_vector(const WordIdentity& word) {
  return std::vector<double>(word.registers.begin(), word.registers.end());
}

double weighted_similarity(std::span<const double> a, std::span<const double> b, const WordIdentity& word,
                           const LogSimilarityRange& range) {
  if (a.size() != word.register_weights.size() || b.size() != word.register_weights.size()) {
    throw InputError("identity dimension does not match word identity");
  }
  double total = 0.0;
  bool weighted = false;
  for (std::size_t m = 0; m < a.size(); ++m) {
    const double w = word.register_weights[m];
    if (w == 0.0) continue;
    weighted = true;
    total += w * rescale_log_similarity(log_similarity(a[m], b[m]), range.lo[m], range.hi[m]);
  }
  if (!weighted) return 1.0;
  return std::clamp(total, 0.0, 1.0);
}

}  // namespace

LogSimilarityRange population_log_range(const IdentityTable& population, const WordIdentity& word) {
  auto range = empty_range(population.dimension());
  const auto signal = register_vector(word);
  for (AgentId a = 0; a < population.num_agents(); ++a) widen(range, word, signal, population.row(a));
  settle(range);
  return range;
}

LogSimilarityRange population_log_range(std::span<const IdentityVector> population, const WordIdentity& word) {
  auto range = empty_range(word.registers.size());
  const auto signal = register_vector(word);
  for (const auto& v : population) {
    if (v.size() != signal.size()) throw InputError("identity dimension does not match word identity");
    widen(range, word, signal, v);
  }
  settle(range);
  return range;
}

LogSimilarityRange neighborhood_log_range(const IdentityTable& population, const SocialGraph& graph, AgentId j,
                                          const WordIdentity& word) {
  auto range = empty_range(population.dimension());
  const auto self = population.row(j);
  for (const Edge& e : graph.in_edges(j)) widen(range, word, population.row(e.source), self);
  settle(range);
  return range;
}

double similarity_to_word(std::span<const double> agent, const WordIdentity& word, const LogSimilarityRange& range) {
  const auto signal = register_vector(word);
  return weighted_similarity(signal, agent, word, range);
}

double similarity_between_agents(std::span<const double> neighbor, std::span<const double> agent,
                                 const WordIdentity& word, const LogSimilarityRange& range) {
  return weighted_similarity(neighbor, agent, word, range);
}

std::vector<double> word_similarities(const IdentityTable& population, const WordIdentity& word) {
  const auto range = population_log_range(population, word);
  const auto signal = register_vector(word);
  std::vector<double> out(population.num_agents());
  for (AgentId a = 0; a < population.num_agents(); ++a) {
    out[a] = weighted_similarity(signal, population.row(a), word, range);
  }
  return out;
}

std::vector<double> neighbor_similarities(const IdentityTable& population, const SocialGraph& graph,
                                          const WordIdentity& word) {
  if (graph.num_agents() != population.num_agents()) throw InputError("graph and identity table sizes differ");
  std::vector<double> out(graph.num_edges());
  auto range = empty_range(population.dimension());
  for (AgentId j = 0; j < graph.num_agents(); ++j) {
    auto in = graph.in_edges(j);
    if (in.empty()) continue;
    std::fill(range.lo.begin(), range.lo.end(), std::numeric_limits<double>::infinity());
    std::fill(range.hi.begin(), range.hi.end(), -std::numeric_limits<double>::infinity());
    const auto self = population.row(j);
    for (const Edge& e : in) widen(range, word, population.row(e.source), self);
    settle(range);
    const std::size_t base = graph.in_offset(j);
    for (std::size_t k = 0; k < in.size(); ++k) {
      out[base + k] = weighted_similarity(population.row(in[k].source), self, word, range);
    }
  }
  return out;
}

}  // namespace lexdiff
