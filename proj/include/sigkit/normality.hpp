#ifndef SIGKIT_NORMALITY_HPP
#define SIGKIT_NORMALITY_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "sigkit/errors.hpp"
#include "sigkit/numerics.hpp"

namespace sigkit {

inline constexpr double kDefaultAlphaNorm = 0.05;
/// Smallest sample the omnibus test accepts.
inline constexpr std::size_t kNormalityMinN = 20;

struct NormalityReport {
  double statistic = 0.0;
  Probability p_value;
  std::size_t n = 0;
  std::string method;
  double alpha_norm = kDefaultAlphaNorm;
  bool pass = false;

  double skewness_z = 0.0;
  double kurtosis_z = 0.0;

  friend bool operator==(const NormalityReport&, const NormalityReport&) = default;
};

namespace detail {

struct Moments {
  double b1_root;  // sample skewness m3 / m2^1.5
  double b2;       // sample kurtosis m4 / m2^2
};

inline Moments sample_moments(std::span<const double> x) {
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) fail(ErrorKind::degenerate_sample, "normality test on a zero-variance sample");
  return {m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

// Normalizing transform of sqrt(b1) (D'Agostino 1970).
inline double skewness_z(double b1_root, double n) {
  const double y = b1_root * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
  const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                       ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  const double u = y / alpha;
  return delta * std::log(u + std::sqrt(u * u + 1.0));
}

// Normalizing transform of b2 (Anscombe & Glynn 1983).
inline double kurtosis_z(double b2, double n) {
  const double mean = 3.0 * (n - 1.0) / (n + 1.0);
  const double var = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  const double x = (b2 - mean) / std::sqrt(var);
  const double root_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                            std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
  const double a = 6.0 + 8.0 / root_beta1 * (2.0 / root_beta1 + std::sqrt(1.0 + 4.0 / (root_beta1 * root_beta1)));
  const double term = 1.0 - 2.0 / (9.0 * a);
  const double denom = 1.0 + x * std::sqrt(2.0 / (a - 4.0));
  const double tail = std::cbrt((1.0 - 2.0 / a) / denom);
  return (term - tail) / std::sqrt(2.0 / (9.0 * a));
}

}  // namespace detail

/// D'Agostino-Pearson omnibus K^2 test; pass means normality is not rejected.
inline NormalityReport dagostino_k2(std::span<const double> sample, double alpha_norm = kDefaultAlphaNorm) {
  if (!(alpha_norm > 0.0 && alpha_norm < 1.0)) fail(ErrorKind::invalid_argument, "alpha_norm must lie in (0, 1)");
  if (sample.size() < kNormalityMinN) fail(ErrorKind::insufficient_data, "normality test needs n >= 20");
  for (double v : sample) {
    if (!std::isfinite(v)) fail(ErrorKind::invalid_argument, "normality test on non-finite data");
  }
  const auto n = static_cast<double>(sample.size());
  const auto m = detail::sample_moments(sample);
  NormalityReport r;
  r.skewness_z = detail::skewness_z(m.b1_root, n);
  r.kurtosis_z = detail::kurtosis_z(m.b2, n);
  r.statistic = r.skewness_z * r.skewness_z + r.kurtosis_z * r.kurtosis_z;
  r.p_value = chi2_sf(r.statistic, 2);
  r.n = sample.size();
  r.method = "dagostino_pearson_k2";
  r.alpha_norm = alpha_norm;
  r.pass = r.p_value.value() > alpha_norm;
  return r;
}

}  // namespace sigkit

#endif  // SIGKIT_NORMALITY_HPP
