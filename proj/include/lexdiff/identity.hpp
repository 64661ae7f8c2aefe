#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lexdiff/network.hpp"

namespace lexdiff {

struct IdentityCategory {
  std::string name;
  std::vector<std::string> registers;
};

/// Ordered identity categories, each with one or more registers. Register
/// dimensions are laid out category by category.
class CategorySchema {
 public:
  CategorySchema() = default;
  /// Throws InputError when empty or when a category has no registers.
  explicit CategorySchema(std::vector<IdentityCategory> categories);

  std::size_t num_categories() const noexcept { return categories_.size(); }
  std::size_t dimension() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
  const std::vector<IdentityCategory>& categories() const noexcept { return categories_; }
  /// First register dimension of category k; offset(num_categories()) == dimension().
  std::size_t offset(std::size_t k) const { return offsets_.at(k); }
  std::size_t category_size(std::size_t k) const { return offsets_.at(k + 1) - offsets_.at(k); }
  std::size_t category_of(std::size_t dim) const;
  /// "category/register" label for dimension `dim`.
  std::string register_label(std::size_t dim) const;

  friend bool operator==(const CategorySchema& a, const CategorySchema& b) { return a.offsets_ == b.offsets_ && a.names_equal(b); }

 private:
  bool names_equal(const CategorySchema& other) const;

  std::vector<IdentityCategory> categories_;
  std::vector<std::size_t> offsets_;
};

using IdentityVector = std::vector<double>;

/// Row-major identities for a whole population, with per-dimension sorted
/// columns cached for quantile lookups.
class IdentityTable {
 public:
  IdentityTable() = default;
  /// `values` holds num_agents * schema.dimension() entries in [0,1].
  IdentityTable(CategorySchema schema, std::size_t num_agents, std::vector<double> values);

  const CategorySchema& schema() const noexcept { return schema_; }
  std::size_t num_agents() const noexcept { return num_agents_; }
  std::size_t dimension() const noexcept { return schema_.dimension(); }
  std::span<const double> row(AgentId a) const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(a) * dimension(), dimension());
  }
  const std::vector<double>& values() const noexcept { return values_; }
  std::span<const double> sorted_column(std::size_t dim) const {
    return std::span<const double>(sorted_).subspan(dim * num_agents_, num_agents_);
  }

 private:
  CategorySchema schema_;
  std::size_t num_agents_ = 0;
  std::vector<double> values_;
  std::vector<double> sorted_;
};

/// Binary word identity with its category weighting.
struct WordIdentity {
  std::vector<std::uint8_t> registers;   // length d, 0/1
  std::vector<double> category_weights;  // length D
  std::vector<double> register_weights;  // length d
  double threshold_used = 0.0;           // Q, or the fallback Q_w
  bool fallback = false;
  std::vector<double> quantiles;         // per-dimension adopter-median quantile

  bool any_active() const noexcept;
};

struct CategoryWeights {
  std::vector<double> categories;  // 1/|active| per active category
  std::vector<double> registers;   // category weight / d_k on its registers
  bool any_active = false;
};

CategoryWeights category_weights(std::span<const std::uint8_t> registers, const CategorySchema& schema);

/// Midpoint-rank empirical CDF of `value` within `sorted_population`:
/// (#below + #equal / 2) / n.
double midpoint_quantile(std::span<const double> sorted_population, double value);

/// Median (mean of the two middle values for even counts).
double median(std::vector<double> values);

/// Enregisters a word from its adopters. A register is set iff the adopters'
/// median on that dimension sits at a population quantile strictly above q;
/// when nothing clears q, the threshold drops to the largest quantile seen and
/// the dimension(s) attaining it are set.
WordIdentity enregister_word(std::span<const IdentityVector> adopters, std::span<const IdentityVector> population,
                             const CategorySchema& schema, double q);
WordIdentity enregister_word(const IdentityTable& population, std::span<const AgentId> adopters, double q);

inline constexpr double kSimilarityFloor = 1e-6;

/// log(max(1 - |a - b|, 1e-6)).
double log_similarity(double a, double b) noexcept;

/// Per-dimension min/max of log-similarity over a reference set. Entries for
/// unweighted dimensions are left at 0.
struct LogSimilarityRange {
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Affine map of log-similarity from [lo, hi] onto [0, 1]; degenerate
/// ranges map to 1.
double rescale_log_similarity(double value, double lo, double hi) noexcept;

/// Range of log-similarity to the word over the whole population.
LogSimilarityRange population_log_range(const IdentityTable& population, const WordIdentity& word);
LogSimilarityRange population_log_range(std::span<const IdentityVector> population, const WordIdentity& word);

/// Range of log-similarity between j and each of its in-neighbours.
LogSimilarityRange neighborhood_log_range(const IdentityTable& population, const SocialGraph& graph, AgentId j,
                                          const WordIdentity& word);

/// delta_jw in [0,1]: register-weighted rescaled log-similarity of an agent to
/// the word. A word with no active registers gives 1.
double similarity_to_word(std::span<const double> agent, const WordIdentity& word, const LogSimilarityRange& range);

/// delta_ij in [0,1]: same construction between neighbour i and agent j, with
/// the range taken over j's in-neighbourhood.
double similarity_between_agents(std::span<const double> neighbor, std::span<const double> agent,
                                 const WordIdentity& word, const LogSimilarityRange& range);

/// similarity_to_word for every agent against the full-population range.
std::vector<double> word_similarities(const IdentityTable& population, const WordIdentity& word);

/// similarity_between_agents for every edge (graph edge order), each with its
/// target's in-neighbourhood range.
std::vector<double> neighbor_similarities(const IdentityTable& population, const SocialGraph& graph,
                                          const WordIdentity& word);

}  // namespace lexdiff
