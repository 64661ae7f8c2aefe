#include "lexdiff/regression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lexdiff/rng.hpp"

namespace lexdiff {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ", ") + p;
  return out;
}

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kRankTolerance = 1e-10;

Eigen::Index rank_of(const Matrix& x) {
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(kRankTolerance);
  return qr.rank();
}

std::vector<std::string> deficient_columns(const Matrix& x, const std::vector<std::string>& names) {
  std::vector<std::string> bad;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    Matrix trial(x.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
    for (std::size_t k = 0; k < kept.size(); ++k) trial.col(static_cast<Eigen::Index>(k)) = x.col(kept[k]);
    trial.col(trial.cols() - 1) = x.col(c);
    if (rank_of(trial) == trial.cols()) {
      kept.push_back(c);
    } else {
      bad.push_back(names[static_cast<std::size_t>(c)]);
    }
  }
  return bad;
}

// Coefficients only; false when the design is rank deficient.
bool solve(const Matrix& x, const Eigen::VectorXd& y, Eigen::VectorXd& beta) {
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < x.cols()) return false;
  beta = qr.solve(y);
  return true;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

RankDeficientError::RankDeficientError(std::vector<std::string> columns)
    : InputError("rank-deficient design; columns adding no rank: " + join(columns)), columns_(std::move(columns)) {}

OlsFit ols(std::span<const double> x, std::span<const double> y, std::vector<std::string> names,
           const OlsOptions& options) {
  const std::size_t p = names.size();
  const std::size_t n = y.size();
  if (p == 0) throw InputError("regression needs at least one column");
  if (x.size() != n * p) throw InputError("design matrix size does not match observations x columns");
  if (n < p) throw RankDeficientError(std::vector<std::string>(names.begin() + static_cast<std::ptrdiff_t>(n), names.end()));
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("design matrix holds a non-finite value");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw InputError("dependent variable holds a non-finite value");
  }

  const Eigen::Index rows = static_cast<Eigen::Index>(n), cols = static_cast<Eigen::Index>(p);
  const Matrix X = Eigen::Map<const Matrix>(x.data(), rows, cols);
  const Eigen::VectorXd Y = Eigen::Map<const Eigen::VectorXd>(y.data(), rows);

  Eigen::VectorXd beta;
  if (!solve(X, Y, beta)) throw RankDeficientError(deficient_columns(X, names));

  OlsFit fit;
  fit.names = std::move(names);
  fit.observations = n;
  fit.coefficients.assign(beta.data(), beta.data() + beta.size());

  const Eigen::VectorXd resid = Y - X * beta;
  const double rss = resid.squaredNorm();
  const double tss = (Y.array() - Y.mean()).matrix().squaredNorm();
  fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : (rss == 0.0 ? 1.0 : 0.0);

  fit.std_errors.assign(p, std::numeric_limits<double>::quiet_NaN());
  if (n > p) {
    const double sigma2 = rss / static_cast<double>(n - p);
    const Matrix xtx = X.transpose() * X;
    const Matrix inv = xtx.ldlt().solve(Matrix::Identity(cols, cols));
    for (std::size_t k = 0; k < p; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      fit.std_errors[k] = std::sqrt(std::max(0.0, sigma2 * inv(kk, kk)));
    }
  }

  if (options.bootstrap > 0) {
    if (!(options.ci_level > 0.0 && options.ci_level < 1.0)) throw InputError("confidence level must lie in (0,1)");
    CounterRng rng(options.seed, 0x424F4F54ULL);
    std::vector<std::vector<double>> draws(p);
    Matrix xb(rows, cols);
    Eigen::VectorXd yb(rows);
    for (std::size_t b = 0; b < options.bootstrap; ++b) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto pick = static_cast<Eigen::Index>(rng.below(n));
        xb.row(r) = X.row(pick);
        yb(r) = Y(pick);
      }
      Eigen::VectorXd bb;
      if (!solve(xb, yb, bb)) {
        ++fit.bootstrap_skipped;
        continue;
      }
      for (std::size_t k = 0; k < p; ++k) draws[k].push_back(bb(static_cast<Eigen::Index>(k)));
    }
    fit.bootstrap_resamples = options.bootstrap;
    const double alpha = (1.0 - options.ci_level) / 2.0;
    for (std::size_t k = 0; k < p; ++k) {
      auto& d = draws[k];
      if (d.empty()) {
        fit.ci_low.push_back(std::numeric_limits<double>::quiet_NaN());
        fit.ci_high.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      std::sort(d.begin(), d.end());
      fit.ci_low.push_back(quantile_sorted(d, alpha));
      fit.ci_high.push_back(quantile_sorted(d, 1.0 - alpha));
    }
  }
  return fit;
}

std::vector<double> standardize(std::span<const double> v) {
  std::vector<double> out(v.size(), 0.0);
  if (v.empty()) return out;
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / sd;
  return out;
}

OlsFit pathway_regression(std::span<const double> dependent, std::span<const double> tau_n,
                          std::span<const double> tau_i, std::span<const PairType> types,
                          const PathwayRegressionOptions& options) {
  const std::size_t n = dependent.size();
  if (tau_n.size() != n || tau_i.size() != n || types.size() != n) {
    throw InputError("pathway regression inputs must be aligned");
  }
  if (n == 0) throw InputError("pathway regression needs observations");

  const bool has_rural = std::find(types.begin(), types.end(), PairType::rural_rural) != types.end();
  const bool has_urban = std::find(types.begin(), types.end(), PairType::urban_urban) != types.end();
  const auto zn = standardize(tau_n);
  const auto zi = standardize(tau_i);

  std::vector<std::string> names{"intercept"};
  if (has_rural) names.push_back("rural");
  if (has_urban) names.push_back("urban");
  const char* terms[] = {"tau_N", "tau_I", "tau_N:tau_I"};
  for (const char* term : terms) {
    names.emplace_back(term);
    if (has_rural) names.push_back(std::string(term) + ":rural");
    if (has_urban) names.push_back(std::string(term) + ":urban");
  }

  std::vector<double> x;
  x.reserve(n * names.size());
  for (std::size_t r = 0; r < n; ++r) {
    const double rural = types[r] == PairType::rural_rural ? 1.0 : 0.0;
    const double urban = types[r] == PairType::urban_urban ? 1.0 : 0.0;
    x.push_back(1.0);
    if (has_rural) x.push_back(rural);
    if (has_urban) x.push_back(urban);
    for (double v : {zn[r], zi[r], zn[r] * zi[r]}) {
      x.push_back(v);
      if (has_rural) x.push_back(v * rural);
      if (has_urban) x.push_back(v * urban);
    }
  }
  std::vector<double> y(dependent.begin(), dependent.end());
  if (options.standardize_dependent) y = standardize(y);
  return ols(x, y, std::move(names), options.ols);
}

}  // namespace lexdiff
