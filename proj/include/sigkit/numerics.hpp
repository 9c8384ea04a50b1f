#ifndef SIGKIT_NUMERICS_HPP
#define SIGKIT_NUMERICS_HPP

// Special functions behind every parametric p-value: the standard normal
// CDF, the regularized incomplete beta and gamma functions, and the Student-t
// and chi-squared survival functions built on them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "sigkit/errors.hpp"

namespace sigkit {

/// A value in [0, 1]. Construction outside the range (or NaN) throws.
class Probability {
 public:
  constexpr Probability() = default;
  explicit Probability(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) fail(ErrorKind::invalid_argument, "probability outside [0, 1]");
  }

  /// Clamps rounding spill (e.g. 1 + 1e-16) into range. NaN still throws.
  static Probability clamped(double value) {
    if (std::isnan(value)) fail(ErrorKind::invalid_argument, "probability is NaN");
    return Probability(std::clamp(value, 0.0, 1.0));
  }

  constexpr double value() const noexcept { return value_; }
  constexpr operator double() const noexcept { return value_; }

  friend constexpr bool operator==(Probability, Probability) = default;

 private:
  double value_ = 0.0;
};

namespace detail {

inline constexpr double kCfEpsilon = 1e-15;
inline constexpr double kTiny = 1e-300;
inline constexpr int kMaxIterations = 100000;

// Modified Lentz evaluation of the incomplete beta continued fraction.
inline double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kCfEpsilon) return h;
  }
  fail(ErrorKind::invalid_argument, "incomplete beta continued fraction did not converge");
}

// Lower regularized gamma P(s, x) by series, valid for x < s + 1.
inline double gamma_p_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  for (int k = 1; k <= kMaxIterations; ++k) {
    term *= x / (s + k);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kCfEpsilon) {
      return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
    }
  }
  fail(ErrorKind::invalid_argument, "incomplete gamma series did not converge");
}

// Upper regularized gamma Q(s, x) by continued fraction, valid for x >= s + 1.
inline double gamma_q_continued_fraction(double s, double x) {
  double b = x + 1.0 - s;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kCfEpsilon) {
      return std::exp(-x + s * std::log(x) - std::lgamma(s)) * h;
    }
  }
  fail(ErrorKind::invalid_argument, "incomplete gamma continued fraction did not converge");
}

}  // namespace detail

/// Standard normal CDF. Infinite arguments return the limits; NaN throws.
inline Probability std_normal_cdf(double z) {
  if (std::isnan(z)) fail(ErrorKind::invalid_argument, "std_normal_cdf: NaN argument");
  if (std::isinf(z)) return Probability(z > 0 ? 1.0 : 0.0);
  return Probability::clamped(0.5 * std::erfc(-z / std::numbers::sqrt2));
}

/// Upper tail 1 - Phi(z), without cancellation for large z.
inline Probability std_normal_sf(double z) { return std_normal_cdf(-z); }

/// Regularized incomplete beta I_x(a, b).
inline double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    fail(ErrorKind::invalid_argument, "reg_inc_beta: shape parameters must be positive and finite");
  }
  if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::invalid_argument, "reg_inc_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  // The fraction converges fastest below the mean; reflect otherwise.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * detail::beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(T > t) for Student's t with `df` degrees of freedom.
inline Probability student_t_sf(double t, std::int64_t df) {
  if (df < 1) fail(ErrorKind::invalid_argument, "student_t_sf: df must be >= 1");
  if (std::isnan(t)) fail(ErrorKind::invalid_argument, "student_t_sf: NaN argument");
  if (std::isinf(t)) return Probability(t > 0 ? 0.0 : 1.0);
  const double nu = static_cast<double>(df);
  // Both branches of the tail identity use the same incomplete beta value.
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * reg_inc_beta(0.5 * nu, 0.5, x);
  return Probability::clamped(t >= 0.0 ? tail : 1.0 - tail);
}

inline Probability student_t_cdf(double t, std::int64_t df) { return student_t_sf(-t, df); }

/// Upper regularized incomplete gamma Q(s, x).
inline double reg_upper_gamma(double s, double x) {
  if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorKind::invalid_argument, "reg_upper_gamma: s must be positive");
  if (!(x >= 0.0)) fail(ErrorKind::invalid_argument, "reg_upper_gamma: x must be >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < s + 1.0) return 1.0 - detail::gamma_p_series(s, x);
  return detail::gamma_q_continued_fraction(s, x);
}

/// P(X > x) for a chi-squared variable with k degrees of freedom.
inline Probability chi2_sf(double x, std::int64_t k) {
  if (k < 1) fail(ErrorKind::invalid_argument, "chi2_sf: k must be >= 1");
  if (!(x >= 0.0)) fail(ErrorKind::invalid_argument, "chi2_sf: x must be >= 0");
  return Probability::clamped(reg_upper_gamma(0.5 * static_cast<double>(k), 0.5 * x));
}

}  // namespace sigkit

#endif  // SIGKIT_NUMERICS_HPP
