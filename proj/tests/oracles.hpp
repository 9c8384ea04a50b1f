#ifndef SIGKIT_TESTS_ORACLES_HPP
#define SIGKIT_TESTS_ORACLES_HPP

// Independent reference computations used only by tests: numerical
// quadrature, brute-force enumeration and hand summation. None of these
// route through the library code they check.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

namespace oracle {

/// P(T > t) by adaptive Gauss-Kronrod integration of the t density over [0, |t|].
inline double student_t_sf(double t, double df) {
  const double log_norm =
      std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * std::numbers::pi);
  const auto density = [&](double x) { return std::exp(log_norm - 0.5 * (df + 1.0) * std::log1p(x * x / df)); };
  double err = 0.0;
  const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      density, 0.0, std::fabs(t), 15, 1e-13, &err);
  return t >= 0.0 ? 0.5 - mass : 0.5 + mass;
}

/// I_x(a, b) by tanh-sinh integration of the beta density.
inline double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const auto density = [&](double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return std::exp((a - 1.0) * std::log(u) + (b - 1.0) * std::log1p(-u) - log_beta);
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(density, 0.0, x);
}

/// Phi(z) by the erfc identity.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Two-sided exact McNemar p: min(1, 2 * sum_{i <= min} C(d, i) / 2^d),
/// with binomial coefficients from Pascal's triangle.
inline double mcnemar_exact(std::uint64_t n10, std::uint64_t n01) {
  const std::uint64_t d = n10 + n01;
  std::vector<double> row{1.0};
  for (std::uint64_t k = 1; k <= d; ++k) {
    std::vector<double> next(row.size() + 1, 0.0);
    for (std::size_t i = 0; i < row.size(); ++i) {
      next[i] += row[i] * 0.5;
      next[i + 1] += row[i] * 0.5;
    }
    row = std::move(next);
  }
  double tail = 0.0;
  for (std::uint64_t i = 0; i <= std::min(n10, n01); ++i) tail += row[i];
  return std::min(1.0, 2.0 * tail);
}

struct SignedRankTails {
  double below;  // P[W+ <= w]
  double above;  // P[W+ >= w]
};

/// Full 2^m enumeration of sign assignments over the given ranks.
inline SignedRankTails wilcoxon_enumerate(const std::vector<double>& ranks, double w_observed) {
  const std::size_t m = ranks.size();
  std::uint64_t below = 0, above = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if ((mask >> i) & 1U) w += ranks[i];
    }
    if (w <= w_observed) ++below;
    if (w >= w_observed) ++above;
  }
  const int e = -static_cast<int>(m);
  return {std::ldexp(static_cast<double>(below), e), std::ldexp(static_cast<double>(above), e)};
}

/// Exact paired-permutation p-value (two-sided) by enumerating all 2^n sign
/// flips of the deltas. Ties within a relative 1e-9 count as extreme.
inline double permutation_enumerate(const std::vector<double>& deltas) {
  const std::size_t n = deltas.size();
  double observed = 0.0;
  for (double d : deltas) observed += d;
  const double threshold = std::fabs(observed) * (1.0 - 1e-9);
  std::uint64_t hits = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += ((mask >> i) & 1U) ? -deltas[i] : deltas[i];
    if (std::fabs(s) >= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(std::uint64_t{1} << n);
}

struct Counts {
  std::int64_t tp, fp, fn;
};

/// Corpus F1 over an index multiset: explicit summation, then the F-beta
/// formula with beta = 1.
inline double f1_over(const std::vector<Counts>& rows, const std::vector<std::size_t>& subset) {
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i : subset) {
    tp += rows[i].tp;
    fp += rows[i].fp;
    fn += rows[i].fn;
  }
  const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * p * r / (p + r);
}

}  // namespace oracle

#endif  // SIGKIT_TESTS_ORACLES_HPP
