#pragma once

// Deliberately naive reference implementations used as test oracles.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace oracle {

inline int sign(double v) { return (v > 0) - (v < 0); }

// O(n^2) pair counting.
inline double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  std::int64_t s = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      s += sign(x[i] - x[j]) * sign(y[i] - y[j]);
      tx += x[i] == x[j];
      ty += y[i] == y[j];
    }
  }
  const std::int64_t total = static_cast<std::int64_t>(n * (n - 1) / 2);
  const std::int64_t dx = total - tx, dy = total - ty;
  if (dx == 0 || dy == 0) return 0.0;
  return static_cast<double>(s) / std::sqrt(static_cast<double>(dx) * static_cast<double>(dy));
}

inline double zero_inflated_tau(std::span<const double> u, std::span<const double> v) {
  const std::size_t n = u.size();
  std::size_t c00 = 0, c01 = 0, c10 = 0;
  std::vector<double> a, b;
  for (std::size_t i = 0; i < n; ++i) {
    if (u[i] > 0 && v[i] > 0) {
      a.push_back(u[i]);
      b.push_back(v[i]);
    } else if (u[i] > 0) {
      ++c10;
    } else if (v[i] > 0) {
      ++c01;
    } else {
      ++c00;
    }
  }
  const double nd = static_cast<double>(n);
  const double p00 = static_cast<double>(c00) / nd, p01 = static_cast<double>(c01) / nd;
  const double p10 = static_cast<double>(c10) / nd, p11 = static_cast<double>(a.size()) / nd;
  const double t11 = a.size() < 2 ? 0.0 : kendall_tau_b(a, b);
  return p11 * p11 * t11 + 2.0 * (p00 * p11 - p01 * p10);
}

// Normal equations solved by Gauss-Jordan elimination with partial pivoting.
inline std::vector<double> least_squares(const std::vector<std::vector<double>>& rows, const std::vector<double>& y) {
  const std::size_t p = rows.front().size();
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) a[i][j] += rows[r][i] * rows[r][j];
      a[i][p] += rows[r][i] * y[r];
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t i = 0; i < p; ++i) beta[i] = a[i][p] / a[i][i];
  return beta;
}

}  // namespace oracle
