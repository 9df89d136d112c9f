#pragma once

#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace escape_lab::detail {

struct ZetaValue {
  double value = 0.0;
  double error = 0.0;  // bound on |value - exact|
};

/// Hurwitz zeta sum_{j>=0} (a + j)^{-s} for real s > 1, a > 0.
///
/// Euler-Maclaurin with the Bernoulli correction series started at a shifted
/// point a + m >= s + 16. For x^{-s} the remainder alternates, so twice the
/// first omitted correction bounds the error.
inline ZetaValue hurwitz_zeta(double s, double a) {
  if (!(s > 1.0) || !(a > 0.0)) throw std::domain_error("hurwitz_zeta: need s > 1, a > 0");
  const double shift_target = s + 16.0;
  const auto m = a < shift_target ? static_cast<long>(std::ceil(shift_target - a)) : 0L;

  double head = 0.0;
  for (long j = 0; j < m; ++j) head += std::pow(a + static_cast<double>(j), -s);

  const double x = a + static_cast<double>(m);
  const double x_pow = std::pow(x, -s);
  double sum = head + x * x_pow / (s - 1.0) + 0.5 * x_pow;

  // term_i = B_{2i}/(2i)! * s (s+1) ... (s+2i-2) * x^{-s-2i+1}
  double rising = s;  // s (s+1) ... (s+2i-2)
  double fact = 2.0;  // (2i)!
  double x_term = x_pow / x;
  double last = 0.0;
  constexpr int kTerms = 14;
  for (int i = 1; i <= kTerms + 1; ++i) {
    const double term = boost::math::bernoulli_b2n<double>(i) / fact * rising * x_term;
    if (i == kTerms + 1) {
      last = term;
      break;
    }
    sum += term;
    rising *= (s + 2.0 * i - 1.0) * (s + 2.0 * i);
    fact *= (2.0 * i + 1.0) * (2.0 * i + 2.0);
    x_term /= x * x;
  }
  const double error = 2.0 * std::abs(last) + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(sum);
  return {sum, error};
}

// Riemann zeta at arbitrary real argument (negative arguments included).
inline double riemann_zeta(double s) { return boost::math::zeta(s); }

}  // namespace escape_lab::detail
