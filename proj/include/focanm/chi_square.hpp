#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace focanm {

namespace detail {

// Series for P(a, x); converges quickly for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x); used for x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
inline std::pair<double, double> regularized_gamma(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("regularized_gamma: a must be positive");
  if (x <= 0.0) return {0.0, 1.0};
  if (x < a + 1.0) {
    const double p = detail::gamma_p_series(a, x);
    return {p, 1.0 - p};
  }
  const double q = detail::gamma_q_fraction(a, x);
  return {1.0 - q, q};
}

inline double chi2_cdf(double x, double dof) { return regularized_gamma(dof / 2.0, x / 2.0).first; }

inline double chi2_pdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  const double k = dof / 2.0;
  return std::exp((k - 1.0) * std::log(x) - x / 2.0 - k * std::log(2.0) - std::lgamma(k));
}

/// Upper quantile: the eta with P(chi2_dof > eta) = delta. Bisection keeps a
/// bracket, Newton steps accelerate inside it; whichever tail is smaller is
/// solved directly so tiny deltas keep full relative accuracy.
inline double chi2_threshold(double delta, int dof) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("chi2_threshold: delta must lie in (0, 1)");
  if (dof < 1) throw std::invalid_argument("chi2_threshold: dof must be >= 1");
  const double k = dof;
  const bool use_upper = delta < 0.5;
  // residual > 0 means x is past the target.
  auto residual = [&](double x) {
    const auto [p, q] = regularized_gamma(k / 2.0, x / 2.0);
    return use_upper ? delta - q : p - (1.0 - delta);
  };

  double lo = 0.0;
  double hi = std::max(1.0, k);
  while (residual(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 500; ++it) {
    const double f = residual(x);
    if (f > 0.0) hi = x; else lo = x;
    const double slope = chi2_pdf(x, k);
    double next = slope > 0.0 ? x - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step <= 1e-14 * x || hi - lo <= 1e-14 * hi) break;
  }
  return x;
}

}  // namespace focanm
