#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lexdiff/error.hpp"
#include "lexdiff/pathways.hpp"

namespace lexdiff {

/// Design matrix without full column rank.
class RankDeficientError : public InputError {
 public:
  explicit RankDeficientError(std::vector<std::string> columns);
  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::string> columns_;
};

struct OlsFit {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  std::vector<double> std_errors;  // NaN when there are no residual degrees of freedom
  double r_squared = 0.0;
  std::size_t observations = 0;
  // Percentile bootstrap intervals; empty unless requested.
  std::vector<double> ci_low, ci_high;
  std::size_t bootstrap_resamples = 0;
  std::size_t bootstrap_skipped = 0;  // rank-deficient resamples
};

struct OlsOptions {
  std::size_t bootstrap = 0;  // 0 disables; 1000 for the usual error bars
  std::uint64_t seed = 0;
  double ci_level = 0.95;
};

/// Ordinary least squares. `x` is row-major, observations x names.size().
/// Throws RankDeficientError naming the columns that add no rank (scanning
/// left to right).
OlsFit ols(std::span<const double> x, std::span<const double> y, std::vector<std::string> names,
           const OlsOptions& options = {});

/// z-scores with the population standard deviation; all zeros when constant.
std::vector<double> standardize(std::span<const double> v);

struct PathwayRegressionOptions {
  bool standardize_dependent = false;
  OlsOptions ols;
};

/// Regresses a pathway strength on tau_N, tau_I, their product and pair
/// type, with every type interaction. Urban-rural is the reference level;
/// levels missing from the data are dropped with their interactions.
/// tau_N and tau_I are z-standardized before the product and interactions
/// are formed; dummies stay 0/1.
OlsFit pathway_regression(std::span<const double> dependent, std::span<const double> tau_n,
                          std::span<const double> tau_i, std::span<const PairType> types,
                          const PathwayRegressionOptions& options = {});

}  // namespace lexdiff
