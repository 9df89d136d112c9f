#pragma once

#include "escape_lab/core.hpp"
#include "escape_lab/zeta.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace escape_lab {

enum class FunctionKind { FatouBaker, ScaledExp, QuarterCosh, CanonicalProduct, GeneralProduct };

inline std::string_view to_string(FunctionKind k) {
  switch (k) {
    case FunctionKind::FatouBaker: return "FatouBaker";
    case FunctionKind::ScaledExp: return "ScaledExp";
    case FunctionKind::QuarterCosh: return "QuarterCosh";
    case FunctionKind::CanonicalProduct: return "CanonicalProduct";
    case FunctionKind::GeneralProduct: return "GeneralProduct";
  }
  return "Unknown";
}

inline std::optional<FunctionKind> function_kind_from_string(std::string_view s) {
  for (auto k : {FunctionKind::FatouBaker, FunctionKind::ScaledExp, FunctionKind::QuarterCosh,
                 FunctionKind::CanonicalProduct, FunctionKind::GeneralProduct}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

/// How the tail of an infinite product is handled.
enum class TailPolicy {
  /// Power-law tails are summed as a zeta series; far-field points use the
  /// uniform asymptotic expansion.
  Accelerated,
  /// Plain partial product with the integral tail bound only.
  PlainTruncation,
};

/// Zero radii r_1 < r_2 < ... of a genus-zero product c * prod (1 + z / r_n).
///
/// Without a generator the radii are the explicit prefix followed by the
/// power law scale * n^exponent. With a generator, (scale, exponent) is only a
/// certified lower bound r_n >= scale * n^exponent used for the tail estimate.
struct ZeroRadiiRule {
  std::vector<double> prefix;
  double scale = 1.0;
  double exponent = 4.0;
  std::function<double(std::size_t)> generator;

  // 1-based.
  double radius(std::size_t n) const {
    if (generator) return generator(n);
    if (n <= prefix.size()) return prefix[n - 1];
    return scale * std::pow(static_cast<double>(n), exponent);
  }

  bool pure_power_law() const { return !generator && prefix.empty(); }
};

struct FunctionSpec {
  FunctionKind kind = FunctionKind::ScaledExp;
  double lambda = 1.0;
  double c = 1.0;
  double rho = 0.25;
  ZeroRadiiRule zeros;
  double truncation_tol = 1e-10;
  std::size_t max_terms = 10'000'000;
  double series_crossover = 100.0;
  // Points closer than near_zero_rel * r_n to the zero -r_n are rejected by
  // log-modulus queries.
  double near_zero_rel = 1e-9;
  double asymptotic_radius = 1e4;
  TailPolicy tail_policy = TailPolicy::Accelerated;
  // Prefix length over which a generator rule is checked at validation.
  std::size_t certify_prefix = 10'000;

  static FunctionSpec fatou_baker() {
    FunctionSpec f;
    f.kind = FunctionKind::FatouBaker;
    return f;
  }
  static FunctionSpec scaled_exp(double lambda) {
    FunctionSpec f;
    f.kind = FunctionKind::ScaledExp;
    f.lambda = lambda;
    f.validate();
    return f;
  }
  static FunctionSpec quarter_cosh() {
    FunctionSpec f;
    f.kind = FunctionKind::QuarterCosh;
    f.rho = 0.25;
    return f;
  }
  static FunctionSpec canonical_product(double rho, double c = 1.0) {
    FunctionSpec f;
    f.kind = FunctionKind::CanonicalProduct;
    f.rho = rho;
    f.c = c;
    f.validate();
    return f;
  }
  static FunctionSpec general_product(double c, ZeroRadiiRule rule) {
    FunctionSpec f;
    f.kind = FunctionKind::GeneralProduct;
    f.c = c;
    f.zeros = std::move(rule);
    f.validate();
    return f;
  }

  bool is_product() const {
    return kind == FunctionKind::CanonicalProduct || kind == FunctionKind::GeneralProduct;
  }

  // All Taylor coefficients >= 0, so M(r) = f(r).
  bool has_nonnegative_coefficients() const { return kind != FunctionKind::FatouBaker; }

  // Zeros exactly on the negative real axis, so m(r) = |f(-r)|.
  bool zeros_on_negative_axis() const { return is_product() || kind == FunctionKind::QuarterCosh; }

  // Growth exponent of the zero radii, r_n ~ n^q.
  double zero_exponent() const {
    if (kind == FunctionKind::QuarterCosh) return 4.0;
    if (kind == FunctionKind::CanonicalProduct) return 1.0 / rho;
    return zeros.exponent;
  }

  double order() const {
    switch (kind) {
      case FunctionKind::FatouBaker:
      case FunctionKind::ScaledExp: return 1.0;
      case FunctionKind::QuarterCosh: return 0.25;
      case FunctionKind::CanonicalProduct: return rho;
      default: return 1.0 / zeros.exponent;
    }
  }

  // 1-based zero radius; only for kinds with zeros on the negative axis.
  double zero_radius(std::size_t n) const {
    if (kind == FunctionKind::QuarterCosh) {
      const double h = static_cast<double>(n) - 0.5;
      return 4.0 * std::pow(kPi, 4) * h * h * h * h;
    }
    if (kind == FunctionKind::CanonicalProduct) return std::pow(static_cast<double>(n), 1.0 / rho);
    return zeros.radius(n);
  }

  void validate() const {
    if (!(truncation_tol > 0.0)) throw Error(ErrorKind::InvalidSpec, "truncation_tol must be > 0");
    if (max_terms == 0) throw Error(ErrorKind::InvalidSpec, "max_terms must be > 0");
    switch (kind) {
      case FunctionKind::ScaledExp:
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidSpec, "lambda must be > 0");
        break;
      case FunctionKind::CanonicalProduct:
        if (!(rho > 0.0 && rho < 0.5)) throw Error(ErrorKind::InvalidSpec, "rho must lie in (0, 1/2)");
        if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorKind::InvalidSpec, "c must be > 0");
        break;
      case FunctionKind::GeneralProduct: {
        if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorKind::InvalidSpec, "c must be > 0");
        if (!(zeros.exponent > 2.0)) throw Error(ErrorKind::InvalidSpec, "zero exponent must be > 2");
        if (!(zeros.scale > 0.0)) throw Error(ErrorKind::InvalidSpec, "zero scale must be > 0");
        const std::size_t check = zeros.generator ? certify_prefix : zeros.prefix.size() + 2;
        double prev = 0.0;
        for (std::size_t n = 1; n <= check; ++n) {
          const double r = zeros.radius(n);
          if (!(r > prev)) throw Error(ErrorKind::InvalidSpec, "zero radii must be positive and strictly increasing");
          const double lower = zeros.scale * std::pow(static_cast<double>(n), zeros.exponent);
          if (zeros.generator && r < lower * (1.0 - 1e-12)) {
            throw Error(ErrorKind::InvalidSpec, "zero radius r_" + std::to_string(n) + " is below the certified bound");
          }
          prev = r;
        }
        break;
      }
      default: break;
    }
  }

  // For CanonicalProduct the rule is synthesized from rho.
  FunctionSpec normalized() const {
    FunctionSpec f = *this;
    if (kind == FunctionKind::CanonicalProduct) {
      f.zeros = ZeroRadiiRule{};
      f.zeros.scale = 1.0;
      f.zeros.exponent = 1.0 / rho;
    } else if (kind == FunctionKind::GeneralProduct) {
      f.rho = 1.0 / zeros.exponent;
    }
    return f;
  }
};

/// Value of f at one point, with the log-modulus computed without overflow.
struct EvalResult {
  Complex value;           // saturates to infinite modulus when |f| > DBL_MAX
  Complex log_value;       // log f, principal value modulo 2 pi i
  double log_abs = 0.0;    // log |f|; -inf at an exact zero
  double trunc_bound = 0.0;
  std::size_t terms = 0;
  bool branch_cut = false;  // QuarterCosh evaluated on the negative real axis
  bool asymptotic = false;  // product evaluated by the far-field expansion
};

struct LogModulus {
  double value = 0.0;
  double bound = 0.0;
  bool asymptotic = false;
  // False when the oscillating factor on the negative axis cannot be resolved
  // in double precision; value is then taken at the nearest antinode.
  bool phase_resolved = true;
};

namespace detail {

inline Complex saturating_exp(Complex L) {
  if (L.real() > kLogMaxDouble) {
    return {std::copysign(kInf, std::cos(L.imag())), std::copysign(kInf, std::sin(L.imag()))};
  }
  if (L.real() == -kInf) return {0.0, 0.0};
  return std::exp(L);
}

// log(1 + w), accurate for small |w|.
inline Complex clog1p(Complex w) {
  if (std::abs(w) < 0.5) {
    const double re = w.real(), im = w.imag();
    return {0.5 * std::log1p(2.0 * re + re * re + im * im), std::atan2(im, 1.0 + re)};
  }
  return std::log(1.0 + w);
}

// log(sum_k exp(u_k)) for complex exponents.
template <std::size_t N>
Complex log_sum_exp(const std::array<Complex, N>& u) {
  double m = -kInf;
  for (const auto& x : u) m = std::max(m, x.real());
  Complex s{0.0, 0.0};
  for (const auto& x : u) s += std::exp(x - m);
  return Complex(m, 0.0) + std::log(s);
}

// log sin(w) stable for large |Im w|.
inline Complex log_sin(Complex w) {
  const Complex i{0.0, 1.0};
  if (w.imag() > 15.0) {
    return -i * w + Complex(-std::log(2.0), kPi / 2) + clog1p(-std::exp(2.0 * i * w));
  }
  if (w.imag() < -15.0) {
    return i * w + Complex(-std::log(2.0), -kPi / 2) + clog1p(-std::exp(-2.0 * i * w));
  }
  return std::log(std::sin(w));
}

inline Complex cot_stable(Complex w) {
  const Complex i{0.0, 1.0};
  if (w.imag() >= 0.0) {
    const Complex e = std::exp(2.0 * i * w);
    return i * (e + 1.0) / (e - 1.0);
  }
  const Complex e = std::exp(-2.0 * i * w);
  return i * (1.0 + e) / (1.0 - e);
}

inline double log_cosh(double y) {
  y = std::abs(y);
  return y - std::log(2.0) + std::log1p(std::exp(-2.0 * y));
}

struct ProductLog {
  Complex log_sum{0.0, 0.0};  // sum of log(1 + z / r_n)
  double bound = 0.0;
  // Part of bound due to truncation alone; route selection compares this
  // against truncation_tol since rounding grows with |log f|.
  double method_error = 0.0;
  std::size_t terms = 0;
  bool asymptotic = false;
};

struct CompensatedSum {
  Complex sum{0.0, 0.0};
  double roundoff = 0.0;  // bound on the accumulated rounding error
};

// Explicit sum over 1-based n in [first, last], Neumaier-compensated per
// component since long partial products lose bits otherwise.
template <class Radius>
CompensatedSum explicit_log_terms(Complex z, std::size_t first, std::size_t last, Radius&& radius) {
  double s[2] = {0.0, 0.0}, comp[2] = {0.0, 0.0};
  double abs_total = 0.0;
  for (std::size_t n = first; n <= last; ++n) {
    const Complex t = clog1p(z / radius(n));
    const double parts[2] = {t.real(), t.imag()};
    for (int c = 0; c < 2; ++c) {
      const double y = s[c] + parts[c];
      comp[c] += std::abs(s[c]) >= std::abs(parts[c]) ? (s[c] - y) + parts[c] : (parts[c] - y) + s[c];
      s[c] = y;
    }
    abs_total += std::abs(t.real());
  }
  return {{s[0] + comp[0], s[1] + comp[1]}, 4.0 * kEps * abs_total};
}

// Plain partial product: enough terms that sum_{n>N} |z|/r_n/(1-|z|/r_{N+1})
// is below tol, using r_n >= a n^q.
inline ProductLog product_plain(const FunctionSpec& f, Complex z) {
  const double a = f.zeros.scale;
  const double q = f.zeros.exponent;
  const double x = std::abs(z) / a;
  ProductLog out;
  if (x == 0.0) return out;
  const double n_ratio = std::pow(2.0 * x, 1.0 / q);
  const double n_tail = std::pow(2.0 * x / ((q - 1.0) * f.truncation_tol), 1.0 / (q - 1.0));
  const double n_need =
      std::ceil(std::max({n_ratio, n_tail, 1.0, static_cast<double>(f.zeros.prefix.size())}));
  if (!(n_need <= static_cast<double>(f.max_terms))) {
    throw Error(ErrorKind::NonConvergentProduct,
                "tail bound needs " + std::to_string(n_need) + " terms at |z| = " + std::to_string(std::abs(z)));
  }
  const auto n = static_cast<std::size_t>(n_need);
  const auto head = explicit_log_terms(z, 1, n, [&](std::size_t k) { return f.zeros.radius(k); });
  out.log_sum = head.sum;
  const double nd = static_cast<double>(n);
  const double ratio = x / std::pow(nd + 1.0, q);
  out.bound = x * std::pow(nd, 1.0 - q) / (q - 1.0) / (1.0 - ratio) + head.roundoff;
  out.terms = n;
  return out;
}

// Explicit head up to N0 (|z|/r_{N0+1} <= 1/4), zeta series for the tail.
inline std::optional<ProductLog> product_accelerated(const FunctionSpec& f, Complex z) {
  const double a = f.zeros.scale;
  const double q = f.zeros.exponent;
  const std::size_t prefix = f.zeros.prefix.size();
  const double x_abs = std::abs(z) / a;
  const double n0_d = std::max(static_cast<double>(prefix), std::ceil(std::pow(4.0 * x_abs, 1.0 / q)) - 1.0);
  if (!(n0_d <= static_cast<double>(f.max_terms))) return std::nullopt;
  const auto n0 = static_cast<std::size_t>(std::max(0.0, n0_d));

  ProductLog out;
  const auto head = explicit_log_terms(z, 1, n0, [&](std::size_t k) { return f.zeros.radius(k); });
  out.log_sum = head.sum;
  out.terms = n0;

  // tail = sum_{n>N0} log(1 + x n^{-q}) = sum_k (-1)^{k+1} x^k / k * zeta(qk, N0+1)
  const Complex x = z / a;
  const double start = static_cast<double>(n0) + 1.0;
  Complex x_pow = x;
  Complex tail{0.0, 0.0};
  double zeta_err = 0.0;
  double x_abs_pow = x_abs;
  constexpr int kMaxOrder = 400;
  for (int k = 1; k <= kMaxOrder; ++k) {
    const auto zk = hurwitz_zeta(q * k, start);
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    tail += sign * x_pow * (zk.value / k);
    zeta_err += x_abs_pow / k * zk.error;
    // remainder after order k: sum_n |w_n|^{k+1} / ((k+1)(1 - |w_n|)), |w_n| <= 1/4
    const double next_pow = x_abs_pow * x_abs;
    const double remainder = next_pow / (k + 1) * hurwitz_zeta(q * (k + 1), start).value * (4.0 / 3.0);
    if (remainder + zeta_err < 0.5 * f.truncation_tol || x_abs == 0.0) {
      out.bound = remainder + zeta_err + head.roundoff;
      out.log_sum += tail;
      return out;
    }
    x_pow *= x;
    x_abs_pow = next_pow;
  }
  return std::nullopt;
}

// Uniform far-field expansion of sum_n log(1 + x / n^q), x = z / a:
//   log 2 - (q/2) log 2pi - (1/2) log u + pi cot(pi rho) u^rho + log sin(pi u^rho)
//   + sum_k (-1)^{k+1} zeta(-qk) / k * x^{-k},        u = -x.
// Valid for all arguments of z; the sine carries the zeros on the negative axis.
struct FarField {
  Complex value;
  double error_estimate;  // truncation of the expansion
  double rounding;        // floating-point error, relative to |value|
};

inline FarField power_law_far_field(Complex x, double q) {
  const double rho = 1.0 / q;
  const Complex u = -x;
  const Complex a = std::pow(u, rho);
  Complex v = Complex(std::log(2.0) - 0.5 * q * std::log(2.0 * kPi), 0.0) - 0.5 * std::log(u) +
              (kPi / std::tan(kPi * rho)) * a + log_sin(kPi * a);
  const double x_abs = std::abs(x);
  Complex inv_pow{1.0, 0.0};
  double err = 0.0;
  double prev = kInf;
  constexpr int kMaxOrder = 40;
  for (int k = 1; k <= kMaxOrder; ++k) {
    inv_pow /= x;
    const double zv = riemann_zeta(-q * k);
    const double mag = std::abs(zv) / k * std::pow(x_abs, -k);
    if (mag > prev && mag > 0.0) {
      // divergent tail of the asymptotic series: stop before it grows
      err = std::max(err, mag);
      break;
    }
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    v += sign * (zv / k) * inv_pow;
    if (mag != 0.0) prev = mag;
    if (k == kMaxOrder) err = mag;
    if (mag < 1e-18 * std::max(1.0, std::abs(v.real()))) {
      err = mag;
      break;
    }
  }
  // Exponentially small contributions omitted by the two-exponential form.
  err += std::exp(-2.0 * kPi * std::abs(a) * std::cos(kPi * rho));
  return {v, err, 8.0 * kEps * std::abs(v)};
}

inline std::optional<ProductLog> product_far_field(const FunctionSpec& f, Complex z) {
  if (f.zeros.generator) return std::nullopt;
  const double a = f.zeros.scale;
  const double q = f.zeros.exponent;
  const Complex x = z / a;
  if (std::abs(x) < f.asymptotic_radius) return std::nullopt;
  double prefix_max = 0.0;
  for (double r : f.zeros.prefix) prefix_max = std::max(prefix_max, r);
  const double power_max = f.zeros.prefix.empty() ? 0.0 : a * std::pow(static_cast<double>(f.zeros.prefix.size()), q);
  if (std::abs(z) < 4.0 * std::max(prefix_max, power_max)) return std::nullopt;

  const auto ff = power_law_far_field(x, q);
  ProductLog out;
  out.log_sum = ff.value;
  out.method_error = ff.error_estimate;
  out.bound = ff.error_estimate + ff.rounding;
  // Swap the leading power-law radii for the explicit prefix.
  for (std::size_t n = 1; n <= f.zeros.prefix.size(); ++n) {
    const double rp = a * std::pow(static_cast<double>(n), q);
    out.log_sum += clog1p(z / f.zeros.prefix[n - 1]) - clog1p(z / rp);
  }
  out.asymptotic = true;
  return out;
}

inline ProductLog product_log(const FunctionSpec& f, Complex z) {
  if (f.tail_policy == TailPolicy::PlainTruncation || f.zeros.generator) return product_plain(f, z);
  if (auto far = product_far_field(f, z); far && far->method_error < f.truncation_tol) return *far;
  if (auto acc = product_accelerated(f, z)) return *acc;
  throw Error(ErrorKind::NonConvergentProduct,
              "no evaluation route meets truncation_tol at |z| = " + std::to_string(std::abs(z)));
}

inline Complex quarter_cosh_series(Complex z) {
  Complex sum{1.0, 0.0};
  Complex term{1.0, 0.0};
  for (int k = 1; k < 200; ++k) {
    const double d = 4.0 * k;
    term *= z / ((d - 3.0) * (d - 2.0) * (d - 1.0) * d);
    sum += term;
    if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(sum))) break;
  }
  return sum;
}

// log((cos w + cosh w) / 2) with w = z^{1/4}; the value does not depend on
// which fourth root is taken.
inline Complex quarter_cosh_log_far(Complex z) {
  const Complex w = std::pow(z, 0.25);
  const Complex i{0.0, 1.0};
  return log_sum_exp(std::array<Complex, 4>{i * w, -i * w, w, -w}) - std::log(4.0);
}

inline EvalResult finish(Complex log_value, double bound, std::size_t terms) {
  EvalResult r;
  r.log_value = log_value;
  r.log_abs = log_value.real();
  r.value = saturating_exp(log_value);
  r.trunc_bound = bound;
  r.terms = terms;
  return r;
}

inline EvalResult finish_direct(Complex value) {
  EvalResult r;
  r.value = value;
  r.log_value = (value == Complex(0.0, 0.0)) ? Complex(-kInf, 0.0) : std::log(value);
  r.log_abs = r.log_value.real();
  return r;
}

}  // namespace detail

/// f(z) for any catalog function.
///
/// Products are summed in log form; the result carries a bound on the
/// truncation error of log|f|. Closed forms have trunc_bound = 0.
inline EvalResult evaluate(const FunctionSpec& spec, Complex z) {
  using namespace detail;
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw Error(ErrorKind::PreconditionViolated, "evaluate: z must be finite");
  }
  switch (spec.kind) {
    case FunctionKind::FatouBaker: {
      // f = z + 1 + e^{-z} = e^{-z} (1 + (z + 1) e^{z}) when e^{-z} dominates
      if (-z.real() > 30.0) {
        auto r = finish(-z + clog1p((z + 1.0) * std::exp(z)), 0.0, 0);
        return r;
      }
      return finish_direct(z + 1.0 + std::exp(-z));
    }
    case FunctionKind::ScaledExp:
      return finish(std::log(spec.lambda) + z, 0.0, 0);
    case FunctionKind::QuarterCosh: {
      EvalResult r = std::abs(z) < spec.series_crossover ? finish_direct(quarter_cosh_series(z))
                                                         : finish(quarter_cosh_log_far(z), 0.0, 0);
      r.branch_cut = z.imag() == 0.0 && z.real() < 0.0;
      return r;
    }
    case FunctionKind::CanonicalProduct:
    case FunctionKind::GeneralProduct: {
      const FunctionSpec f = spec.normalized();
      const auto p = product_log(f, z);
      auto r = finish(Complex(std::log(f.c), 0.0) + p.log_sum, p.bound, p.terms);
      r.asymptotic = p.asymptotic;
      return r;
    }
  }
  throw Error(ErrorKind::InvalidSpec, "unknown function kind");
}

namespace detail {

// Throws NearZero if z sits within near_zero_rel of a tabulated zero.
inline void check_near_zero(const FunctionSpec& f, Complex z) {
  if (!f.zeros_on_negative_axis()) return;
  const double r = std::abs(z);
  std::size_t guess = 1;
  if (f.kind == FunctionKind::QuarterCosh) {
    guess = static_cast<std::size_t>(std::max(1.0, std::floor(std::pow(r / (4.0 * std::pow(kPi, 4)), 0.25) + 0.5)));
  } else if (!f.zeros.generator) {
    const double g = std::pow(r / f.zeros.scale, 1.0 / f.zeros.exponent);
    guess = static_cast<std::size_t>(std::max(1.0, std::min(g, 1e15)));
    for (std::size_t n = 1; n <= f.zeros.prefix.size(); ++n) {
      const double rn = f.zeros.prefix[n - 1];
      if (std::abs(z + rn) <= f.near_zero_rel * rn) {
        throw Error(ErrorKind::NearZero, "point within relative " + std::to_string(f.near_zero_rel) + " of zero -r_" + std::to_string(n));
      }
    }
  } else {
    const double g = std::pow(r / f.zeros.scale, 1.0 / f.zeros.exponent);
    guess = static_cast<std::size_t>(std::max(1.0, std::min(g, static_cast<double>(f.max_terms))));
    // lower bound only: scan down to the first radius below r
    while (guess > 1 && f.zeros.radius(guess) > r) --guess;
  }
  for (std::size_t n = guess > 2 ? guess - 2 : 1; n <= guess + 2; ++n) {
    const double rn = f.zero_radius(n);
    if (std::abs(z + rn) <= f.near_zero_rel * rn) {
      throw Error(ErrorKind::NearZero, "point within relative " + std::to_string(f.near_zero_rel) + " of zero -r_" + std::to_string(n));
    }
  }
}

}  // namespace detail

/// log|f(r e^{i theta})| with its truncation bound.
inline LogModulus log_modulus(const FunctionSpec& f, double r, double theta) {
  if (!(r > 0.0)) throw Error(ErrorKind::PreconditionViolated, "radius must be > 0");
  const Complex z = std::polar(r, theta);
  detail::check_near_zero(f, z);
  const auto e = evaluate(f, z);
  return {e.log_abs, e.trunc_bound, e.asymptotic, true};
}

/// log|f(r e^{i theta})|, usable far beyond the overflow radius of f.
inline double evaluate_log_on_ray(const FunctionSpec& f, double r, double theta) {
  return log_modulus(f, r, theta).value;
}

/// r f'(r) / f(r) on the positive real axis.
inline double log_derivative_on_ray(const FunctionSpec& spec, double r) {
  using namespace detail;
  if (!(r > 0.0)) throw Error(ErrorKind::PreconditionViolated, "radius must be > 0");
  switch (spec.kind) {
    case FunctionKind::ScaledExp: return r;
    case FunctionKind::FatouBaker: {
      const double e = std::exp(-r);
      return r * (1.0 - e) / (r + 1.0 + e);
    }
    case FunctionKind::QuarterCosh: {
      if (r < spec.series_crossover) {
        double sum = 1.0, dsum = 0.0, term = 1.0;
        for (int k = 1; k < 200; ++k) {
          const double d = 4.0 * k;
          term *= r / ((d - 3.0) * (d - 2.0) * (d - 1.0) * d);
          sum += term;
          dsum += k * term;
          if (term < 1e-18 * sum) break;
        }
        return dsum / sum;
      }
      const double w = std::pow(r, 0.25);
      const double e1 = std::exp(-w), e2 = std::exp(-2.0 * w);
      return 0.25 * w * (1.0 - 2.0 * std::sin(w) * e1 - e2) / (1.0 + 2.0 * std::cos(w) * e1 + e2);
    }
    case FunctionKind::CanonicalProduct:
    case FunctionKind::GeneralProduct: {
      const FunctionSpec f = spec.normalized();
      const double a = f.zeros.scale;
      const double q = f.zeros.exponent;
      const double x = r / a;
      if (f.tail_policy == TailPolicy::Accelerated && !f.zeros.generator) {
        if (auto far = product_far_field(f, Complex(r, 0.0)); far && far->method_error < f.truncation_tol) {
          const double rho = 1.0 / q;
          const Complex u = Complex(-x, 0.0);
          const Complex av = std::pow(u, rho);
          Complex d = -0.5 + (kPi / std::tan(kPi * rho)) * rho * av + kPi * rho * av * cot_stable(kPi * av);
          double prev = kInf;
          for (int k = 1; k <= 40; ++k) {
            const double zv = riemann_zeta(-q * k);
            const double mag = std::abs(zv) * std::pow(x, -k);
            if (mag > prev && mag > 0.0) break;
            const double sign = (k % 2 == 1) ? 1.0 : -1.0;
            d -= sign * zv * std::pow(x, -k);
            if (mag != 0.0) prev = mag;
            if (mag < 1e-18 * std::abs(d)) break;
          }
          double prefix_adj = 0.0;
          for (std::size_t n = 1; n <= f.zeros.prefix.size(); ++n) {
            const double rp = a * std::pow(static_cast<double>(n), q);
            prefix_adj += r / (r + f.zeros.prefix[n - 1]) - r / (r + rp);
          }
          return d.real() + prefix_adj;
        }
        const std::size_t prefix = f.zeros.prefix.size();
        const double n0_d = std::max(static_cast<double>(prefix), std::ceil(std::pow(4.0 * x, 1.0 / q)) - 1.0);
        if (n0_d <= static_cast<double>(f.max_terms)) {
          const auto n0 = static_cast<std::size_t>(std::max(0.0, n0_d));
          double head = 0.0;
          for (std::size_t n = 1; n <= n0; ++n) head += r / (r + f.zeros.radius(n));
          // r / (r + a n^q) = sum_k (-1)^{k+1} x^k n^{-qk}
          const double start = static_cast<double>(n0) + 1.0;
          double tail = 0.0, xp = x;
          for (int k = 1; k <= 400; ++k) {
            const double sign = (k % 2 == 1) ? 1.0 : -1.0;
            tail += sign * xp * hurwitz_zeta(q * k, start).value;
            const double rem = xp * x * hurwitz_zeta(q * (k + 1), start).value * (4.0 / 3.0);
            if (rem < 0.5 * f.truncation_tol * std::max(1.0, head)) break;
            xp *= x;
          }
          return head + tail;
        }
      }
      // plain truncation
      const double n_ratio = std::pow(2.0 * x, 1.0 / q);
      const double n_tail = std::pow(2.0 * x / ((q - 1.0) * f.truncation_tol), 1.0 / (q - 1.0));
      const double n_need =
          std::ceil(std::max({n_ratio, n_tail, 1.0, static_cast<double>(f.zeros.prefix.size())}));
      if (!(n_need <= static_cast<double>(f.max_terms))) {
        throw Error(ErrorKind::NonConvergentProduct, "derivative tail needs " + std::to_string(n_need) + " terms");
      }
      double s = 0.0;
      for (std::size_t n = 1; n <= static_cast<std::size_t>(n_need); ++n) s += r / (r + f.zeros.radius(n));
      return s;
    }
  }
  throw Error(ErrorKind::InvalidSpec, "unknown function kind");
}

/// log f(r) on the positive axis for r = e^{log_r}, including radii beyond
/// the double range. For kinds with nonnegative coefficients this is log M(r).
inline LogModulus log_modulus_positive_axis(const FunctionSpec& spec, double log_r) {
  using namespace detail;
  switch (spec.kind) {
    case FunctionKind::ScaledExp:
      return {std::log(spec.lambda) + std::exp(log_r), 0.0};
    case FunctionKind::FatouBaker: {
      if (log_r > kLogMaxDouble) throw Error(ErrorKind::OverflowDomain, "radius not representable");
      const double r = std::exp(log_r);
      return {std::log(r) + std::log1p((1.0 + std::exp(-r)) / r), 0.0};
    }
    case FunctionKind::QuarterCosh: {
      if (log_r < std::log(spec.series_crossover)) {
        return {std::log(quarter_cosh_series(Complex(std::exp(log_r), 0.0)).real()), 0.0};
      }
      const double s = std::exp(0.25 * log_r);
      return {s - std::log(4.0) + std::log1p(std::exp(-2.0 * s) + 2.0 * std::cos(s) * std::exp(-s)), 0.0};
    }
    case FunctionKind::CanonicalProduct:
    case FunctionKind::GeneralProduct: {
      const FunctionSpec f = spec.normalized();
      if (log_r < kLogMaxDouble) {
        const auto e = evaluate(f, Complex(std::exp(log_r), 0.0));
        return {e.log_abs, e.trunc_bound, e.asymptotic};
      }
      if (f.zeros.generator) throw Error(ErrorKind::NonConvergentProduct, "radius beyond direct summation");
      // r itself overflows: keep only the terms that survive
      const double q = f.zeros.exponent;
      const double rho = 1.0 / q;
      const double log_x = log_r - std::log(f.zeros.scale);
      const double t = std::exp(rho * log_x);
      double v = std::log(f.c) + (kPi / std::sin(kPi * rho)) * t - 0.5 * log_x - 0.5 * q * std::log(2.0 * kPi);
      for (std::size_t n = 1; n <= f.zeros.prefix.size(); ++n) {
        v += std::log(f.zeros.scale * std::pow(static_cast<double>(n), q) / f.zeros.prefix[n - 1]);
      }
      return {v, 8.0 * kEps * std::abs(v), true};
    }
  }
  throw Error(ErrorKind::InvalidSpec, "unknown function kind");
}

/// log|f(-r)| for r = e^{log_r}: the minimum modulus for kinds whose zeros
/// lie on the negative axis.
///
/// When the oscillating factor cannot be resolved at this radius the value
/// refers to the antinode nearest to r (where the oscillation has modulus 1)
/// and phase_resolved is false.
inline LogModulus log_modulus_negative_axis(const FunctionSpec& spec, double log_r, bool reject_near_zero = true) {
  using namespace detail;
  constexpr double kPhaseResolution = 1e-6;
  switch (spec.kind) {
    case FunctionKind::ScaledExp:
      return {std::log(spec.lambda) - std::exp(log_r), 0.0};
    case FunctionKind::FatouBaker: {
      if (log_r > kLogMaxDouble) throw Error(ErrorKind::OverflowDomain, "radius not representable");
      const double r = std::exp(log_r);
      return {evaluate(spec, Complex(-r, 0.0)).log_abs, 0.0};
    }
    case FunctionKind::QuarterCosh: {
      const double s = std::exp(0.25 * log_r);
      const double y = s / std::sqrt(2.0);
      // phase error of y is about y * (1 + |log r| / 4) * eps
      const bool resolved = log_r < kLogMaxDouble && y * (1.0 + std::abs(log_r)) * kEps < kPhaseResolution;
      if (!resolved) return {log_cosh(y), 8.0 * kEps * y, false, false};
      const double r = std::exp(log_r);
      if (reject_near_zero) check_near_zero(spec, Complex(-r, 0.0));
      if (r < spec.series_crossover) return {std::log(std::abs(quarter_cosh_series(Complex(-r, 0.0)).real())), 0.0};
      return {std::log(std::abs(std::cos(y))) + log_cosh(y), 0.0};
    }
    case FunctionKind::CanonicalProduct:
    case FunctionKind::GeneralProduct: {
      const FunctionSpec f = spec.normalized();
      const double q = f.zeros.exponent;
      const double rho = 1.0 / q;
      const double log_x = log_r - std::log(f.zeros.scale);
      const double t = std::exp(rho * log_x);
      const bool resolved = log_r < kLogMaxDouble && t * (1.0 + rho * std::abs(log_r)) * kEps < kPhaseResolution;
      if (resolved) {
        const double r = std::exp(log_r);
        if (reject_near_zero) check_near_zero(f, Complex(-r, 0.0));
        const auto e = evaluate(f, Complex(-r, 0.0));
        return {e.log_abs, e.trunc_bound, e.asymptotic, true};
      }
      if (f.zeros.generator) throw Error(ErrorKind::NonConvergentProduct, "radius beyond direct summation");
      // envelope at the antinode t = n + 1/2, where |2 sin(pi t)| = 2
      double v = std::log(f.c) + std::log(2.0) - 0.5 * q * std::log(2.0 * kPi) - 0.5 * log_x +
                 (kPi / std::tan(kPi * rho)) * t;
      for (std::size_t n = 1; n <= f.zeros.prefix.size(); ++n) {
        v += std::log(f.zeros.scale * std::pow(static_cast<double>(n), q) / f.zeros.prefix[n - 1]);
      }
      return {v, 8.0 * kEps * std::abs(v), true, false};
    }
  }
  throw Error(ErrorKind::InvalidSpec, "unknown function kind");
}

/// Number of zeros of f in |z| < e^{log_r} (kinds with tabulated zeros).
inline double zero_count(const FunctionSpec& spec, double log_r) {
  if (spec.kind == FunctionKind::QuarterCosh) {
    // 4 pi^4 (n - 1/2)^4 < r  <=>  n < (r / 4 pi^4)^{1/4} + 1/2
    const double t = std::exp(0.25 * (log_r - std::log(4.0 * std::pow(kPi, 4))));
    return std::ceil(t + 0.5) - 1.0;
  }
  if (!spec.is_product()) return 0.0;
  const FunctionSpec f = spec.normalized();
  if (f.zeros.generator) {
    const double r = std::exp(log_r);
    double n = 0.0;
    while (n < static_cast<double>(f.max_terms) && f.zeros.radius(static_cast<std::size_t>(n) + 1) < r) n += 1.0;
    return n;
  }
  double count = 0.0;
  const double r = std::exp(log_r);
  for (double rp : f.zeros.prefix) count += rp < r ? 1.0 : 0.0;
  const double p = static_cast<double>(f.zeros.prefix.size());
  const double power = std::ceil(std::exp((log_r - std::log(f.zeros.scale)) / f.zeros.exponent)) - 1.0;
  return count + std::max(0.0, power - p);
}

/// Canonical text form of every parameter that influences values of f.
inline std::string fingerprint(const FunctionSpec& spec) {
  const FunctionSpec f = spec.normalized();
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string s = "kind=" + std::string(to_string(f.kind));
  switch (f.kind) {
    case FunctionKind::ScaledExp: s += ";lambda=" + num(f.lambda); break;
    case FunctionKind::CanonicalProduct: s += ";rho=" + num(f.rho) + ";c=" + num(f.c); break;
    case FunctionKind::GeneralProduct:
      s += ";c=" + num(f.c) + ";scale=" + num(f.zeros.scale) + ";exponent=" + num(f.zeros.exponent) + ";prefix=";
      for (double r : f.zeros.prefix) s += num(r) + ",";
      if (f.zeros.generator) s += ";generator";
      break;
    default: break;
  }
  if (f.is_product()) {
    s += ";tol=" + num(f.truncation_tol) + ";max_terms=" + std::to_string(f.max_terms) +
         ";asymptotic_radius=" + num(f.asymptotic_radius) +
         ";tail=" + (f.tail_policy == TailPolicy::Accelerated ? "accelerated" : "plain");
  }
  if (f.kind == FunctionKind::QuarterCosh) s += ";crossover=" + num(f.series_crossover);
  return s;
}

/// 64-bit FNV-1a of the fingerprint.
inline std::uint64_t function_hash(const FunctionSpec& f) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : fingerprint(f)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

enum class OrbitExit { Bailout, MaxSteps, Overflow };

inline std::string_view to_string(OrbitExit e) {
  switch (e) {
    case OrbitExit::Bailout: return "Bailout";
    case OrbitExit::MaxSteps: return "MaxSteps";
    case OrbitExit::Overflow: return "Overflow";
  }
  return "Unknown";
}

struct Orbit {
  std::vector<Complex> points;     // z_0, z_1, ... up to the exit step
  std::vector<double> log_moduli;  // log|z_n|; +inf at an overflow step
  OrbitExit exit = OrbitExit::MaxSteps;
  std::size_t exit_step = 0;
};

namespace detail {

// One iteration step. A saturated value keeps its finite log-modulus; nullopt
// means the product cannot be summed at this modulus.
inline std::optional<EvalResult> step(const FunctionSpec& f, Complex z) {
  try {
    return evaluate(f, z);
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::NonConvergentProduct) return std::nullopt;
    throw;
  }
}

}  // namespace detail

/// Iterates f from z0 until |f^n(z0)| > bailout or max_steps is reached.
inline Orbit iterate_orbit(const FunctionSpec& f, Complex z0, std::size_t max_steps, double bailout) {
  if (!(bailout > 0.0)) throw Error(ErrorKind::PreconditionViolated, "bailout must be > 0");
  Orbit orbit;
  orbit.points.push_back(z0);
  orbit.log_moduli.push_back(std::log(std::abs(z0)));
  Complex z = z0;
  for (std::size_t n = 1; n <= max_steps; ++n) {
    const auto e = detail::step(f, z);
    if (!e || !std::isfinite(e->value.real()) || !std::isfinite(e->value.imag())) {
      orbit.points.push_back(Complex(kInf, 0.0));
      orbit.log_moduli.push_back(e ? e->log_abs : kInf);
      orbit.exit = OrbitExit::Overflow;
      orbit.exit_step = n;
      return orbit;
    }
    z = e->value;
    orbit.points.push_back(z);
    orbit.log_moduli.push_back(e->log_abs);
    if (std::abs(z) > bailout) {
      orbit.exit = OrbitExit::Bailout;
      orbit.exit_step = n;
      return orbit;
    }
  }
  orbit.exit = OrbitExit::MaxSteps;
  orbit.exit_step = max_steps;
  return orbit;
}

}  // namespace escape_lab
