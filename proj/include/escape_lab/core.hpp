#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace escape_lab {

using Complex = std::complex<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

// Natural log of the largest finite double.
inline const double kLogMaxDouble = std::log(std::numeric_limits<double>::max());

/// Failure categories surfaced by the numerical operations.
enum class ErrorKind {
  InvalidSpec,
  PreconditionViolated,
  NonConvergentProduct,
  NearZero,
  AtZero,
  OverflowDomain,
  InsufficientGrowth,
  MissingPairs,
  MeshExhausted,
  TargetOnCurve,
  NoCandidate,
  SurroundFailure,
  LadderOverflow,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::NonConvergentProduct: return "NonConvergentProduct";
    case ErrorKind::NearZero: return "NearZero";
    case ErrorKind::AtZero: return "AtZero";
    case ErrorKind::OverflowDomain: return "OverflowDomain";
    case ErrorKind::InsufficientGrowth: return "InsufficientGrowth";
    case ErrorKind::MissingPairs: return "MissingPairs";
    case ErrorKind::MeshExhausted: return "MeshExhausted";
    case ErrorKind::TargetOnCurve: return "TargetOnCurve";
    case ErrorKind::NoCandidate: return "NoCandidate";
    case ErrorKind::SurroundFailure: return "SurroundFailure";
    case ErrorKind::LadderOverflow: return "LadderOverflow";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Open disc in the plane.
struct Disc {
  Complex center{0.0, 0.0};
  double radius = 1.0;

  bool contains(Complex z) const { return std::abs(z - center) < radius; }
  double outer_radius() const { return std::abs(center) + radius; }
};

// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// log|1 + w| with care near w = -1 and for small w.
inline double log_abs_one_plus(Complex w) {
  const double re = w.real();
  const double im = w.imag();
  if (std::abs(re) < 0.5 && std::abs(im) < 0.5) {
    return 0.5 * std::log1p(2.0 * re + re * re + im * im);
  }
  return std::log(std::hypot(1.0 + re, im));
}

}  // namespace escape_lab
