#pragma once

// Test-only reference computations. None of these call into the library's
// divergence or queue code.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

inline double normal_pdf(double x, double mean, double variance) {
  const double z = x - mean;
  return std::exp(-z * z / (2.0 * variance)) / std::sqrt(2.0 * std::numbers::pi * variance);
}

/// KL(N(m1, v) || N(m2, v)) by composite Simpson integration of
/// p log(p/q) over mean1 +- 10 sd.
inline double kl_by_quadrature(double m1, double m2, double variance, int intervals = 20000) {
  const double sd = std::sqrt(variance);
  const double lo = m1 - 10.0 * sd;
  const double hi = m1 + 10.0 * sd;
  const double h = (hi - lo) / intervals;
  const auto f = [&](double x) {
    const double p = normal_pdf(x, m1, variance);
    // log(p/q) written from the exponents to avoid underflow in the tails.
    const double log_ratio = (-(x - m1) * (x - m1) + (x - m2) * (x - m2)) / (2.0 * variance);
    return p * log_ratio;
  };
  double sum = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * f(lo + i * h);
  return sum * h / 3.0;
}

/// max(0, max over start v of sum_{l=v..t} g_l), by direct enumeration.
inline double max_partial_sum(const std::vector<double>& increments) {
  double best = 0.0;
  for (std::size_t v = 0; v < increments.size(); ++v) {
    double s = 0.0;
    for (std::size_t l = v; l < increments.size(); ++l) s += increments[l];
    best = std::max(best, s);
  }
  return best;
}

/// Dot product by explicit summation.
inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace oracle
