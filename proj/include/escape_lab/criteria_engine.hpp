#pragma once

#include "escape_lab/core.hpp"
#include "escape_lab/function_catalog.hpp"
#include "escape_lab/modulus_profiler.hpp"
#include "escape_lab/worker_pool.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace escape_lab {

/// Log-domain oracle for M and m that falls back to a fitted growth model
/// when the function cannot be evaluated at a radius.
///
/// The model is log log M = b + rho log r, fitted over the two decades below
/// the first radius that failed. Any value produced by the model is flagged.
class GrowthOracle {
 public:
  explicit GrowthOracle(FunctionSpec f) : f_(std::move(f)) {}

  struct Value {
    double log_value = 0.0;
    bool extrapolated = false;
    bool phase_resolved = true;
  };

  Value log_M(double log_r) {
    try {
      return {log_max_modulus(f_, log_r).log_value, false, true};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::OverflowDomain) throw;
    }
    fit(log_r);
    return {std::exp(fit_M_->first + fit_M_->second * log_r), true, true};
  }

  Value log_m(double log_r) {
    try {
      const auto v = log_min_modulus(f_, log_r);
      return {v.log_value, false, v.phase_resolved};
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::AtZero) return {-kInf, false, true};
      if (e.kind() != ErrorKind::OverflowDomain) throw;
    }
    fit(log_r);
    if (!fit_m_) return {-kInf, true, true};
    return {std::exp(fit_m_->first + fit_m_->second * log_r), true, true};
  }

  const FunctionSpec& function() const { return f_; }

 private:
  using Line = std::pair<double, double>;  // intercept, slope

  static std::optional<Line> regress(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() < 2) return std::nullopt;
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - sx / n) * (xs[i] - sx / n);
      sxy += (xs[i] - sx / n) * (ys[i] - sy / n);
    }
    const double slope = sxy / sxx;
    return Line{sy / n - slope * sx / n, slope};
  }

  void fit(double failed_log_r) {
    if (fit_M_) return;
    // Walk down from the failing radius to the evaluable range.
    double top = std::min(failed_log_r, kLogMaxDouble);
    for (int guard = 0; guard < 200; ++guard) {
      try {
        (void)log_max_modulus(f_, top);
        break;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::OverflowDomain) throw;
        top -= std::log(10.0) / 4.0;
      }
    }
    std::vector<double> xs, ysM, xm, ysm;
    for (int j = 0; j <= 8; ++j) {
      const double lr = top - j * std::log(10.0) / 4.0;
      try {
        const double lM = log_max_modulus(f_, lr).log_value;
        if (lM > 0.0) {
          xs.push_back(lr);
          ysM.push_back(std::log(lM));
        }
        const auto lm = log_min_modulus(f_, lr).log_value;
        if (lm > 0.0) {
          xm.push_back(lr);
          ysm.push_back(std::log(lm));
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::OverflowDomain && e.kind() != ErrorKind::AtZero) throw;
      }
    }
    fit_M_ = regress(xs, ysM);
    if (!fit_M_) throw Error(ErrorKind::OverflowDomain, "no evaluable radii to fit a growth model");
    // m is only modelled when it is growing on every fitted radius.
    if (xm.size() == xs.size()) fit_m_ = regress(xm, ysm);
  }

  FunctionSpec f_;
  std::optional<Line> fit_M_;
  std::optional<Line> fit_m_;
};

/// Sequences R_n, rho_n with R_{n+1} = M(R_n), R_n <= rho_n <= R_n^{c(n)} and
/// m(rho_n) > R_{n+1}^{c(n+1)}, all stored as natural logs. Index i holds n = i + 1.
struct BakerCertificate {
  std::vector<double> logR;
  std::vector<double> logrho;
  std::vector<double> c_schedule;
  std::vector<double> margins;
  std::optional<std::size_t> extrapolated_from;  // first n using the fitted model
  std::optional<std::size_t> no_candidate;       // n at which the search failed
  // For each rho_n: false when log m was taken at the nearest antinode
  // because the radius is too large for the oscillation to be resolved.
  std::vector<bool> phase_resolved;
  bool verified = false;
};

struct BakerOptions {
  std::size_t candidates = 64;
  std::size_t refine_candidates = 64;
};

/// Builds the sequences step by step; a step where no candidate radius has
/// positive margin ends the construction with verified = false.
inline BakerCertificate build_baker_sequences(const FunctionSpec& f, double logR1, const std::vector<double>& c_schedule,
                                              std::size_t n_max, const BakerOptions& opt = {},
                                              WorkerPool* pool = nullptr) {
  f.validate();
  if (n_max == 0) throw Error(ErrorKind::PreconditionViolated, "n_max must be >= 1");
  if (c_schedule.size() < n_max + 1) {
    throw Error(ErrorKind::PreconditionViolated, "c_schedule needs at least n_max + 1 entries");
  }
  for (double c : c_schedule) {
    if (!(c > 1.0) || !std::isfinite(c)) throw Error(ErrorKind::PreconditionViolated, "every c(n) must be > 1");
  }
  if (!(logR1 > 0.0) || !std::isfinite(logR1)) throw Error(ErrorKind::PreconditionViolated, "need R_1 > 1");

  GrowthOracle oracle(f);
  BakerCertificate cert;
  cert.c_schedule.assign(c_schedule.begin(), c_schedule.begin() + static_cast<std::ptrdiff_t>(n_max + 1));
  cert.logR.push_back(logR1);

  auto next_logR = [&](std::size_t n) {
    const auto v = oracle.log_M(cert.logR.back());
    if (v.extrapolated && !cert.extrapolated_from) cert.extrapolated_from = n;
    if (!(v.log_value > cert.logR.back())) {
      throw Error(ErrorKind::PreconditionViolated,
                  "sequence is not expanding: log M(R_" + std::to_string(n) + ") = " + std::to_string(v.log_value) +
                      " <= log R_" + std::to_string(n) + " = " + std::to_string(cert.logR.back()));
    }
    if (!std::isfinite(v.log_value)) throw Error(ErrorKind::OverflowDomain, "log R_{n+1} is not representable");
    cert.logR.push_back(v.log_value);
  };

  next_logR(1);
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double lo = cert.logR[n - 1];
    const double hi = cert.c_schedule[n - 1] * lo;
    const double bound = cert.c_schedule[n] * cert.logR[n];

    struct Candidate {
      double logrho = 0.0;
      double margin = -kInf;
      bool extrapolated = false;
      bool phase_resolved = true;
    };
    auto scan = [&](double a, double b, std::size_t count) {
      std::vector<Candidate> cs(count);
      for_each_index(pool, count, [&](std::size_t i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        GrowthOracle local(oracle);
        const double lr = a + t * (b - a);
        const auto m = local.log_m(lr);
        cs[i] = {lr, m.log_value - bound, m.extrapolated, m.phase_resolved};
      });
      std::size_t best = 0;
      for (std::size_t i = 1; i < count; ++i) {
        if (cs[i].margin > cs[best].margin) best = i;
      }
      return std::pair{cs, best};
    };
    auto [coarse, ib] = scan(lo, hi, opt.candidates);
    Candidate best = coarse[ib];
    const double step = (hi - lo) / static_cast<double>(opt.candidates - 1);
    auto [fine, jb] = scan(std::max(lo, best.logrho - step), std::min(hi, best.logrho + step), opt.refine_candidates);
    if (fine[jb].margin > best.margin) best = fine[jb];

    if (best.extrapolated && !cert.extrapolated_from) cert.extrapolated_from = n;
    if (!(best.margin > 0.0)) {
      cert.no_candidate = n;
      cert.margins.push_back(best.margin);
      cert.logrho.push_back(best.logrho);
      cert.phase_resolved.push_back(best.phase_resolved);
      break;
    }
    cert.logrho.push_back(best.logrho);
    cert.margins.push_back(best.margin);
    cert.phase_resolved.push_back(best.phase_resolved);
    if (n < n_max) next_logR(n + 1);
  }
  cert.verified = !cert.no_candidate && cert.margins.size() == n_max &&
                  std::all_of(cert.margins.begin(), cert.margins.end(), [](double m) { return m > 0.0; });
  return cert;
}

/// Winding numbers of theta -> f(r e^{i theta}) - w, r = e^{log_r}, around
/// each target, on an angular mesh refined until every argument increment is
/// below pi/2.
inline std::vector<long> check_winding(const FunctionSpec& f, double log_r, const std::vector<Complex>& targets,
                                       std::size_t max_samples = std::size_t{1} << 20) {
  if (log_r > kLogMaxDouble) throw Error(ErrorKind::OverflowDomain, "radius not representable");
  const double r = std::exp(log_r);
  std::vector<long> out;
  out.reserve(targets.size());
  for (const Complex w : targets) {
    const double scale = std::max(1.0, std::abs(w));
    const double log_w = std::log(std::abs(w));
    double min_dist = kInf;
    // arg(f - w) and |f - w| from log f, avoiding overflow of f itself.
    auto sample = [&](double th) {
      const auto e = evaluate(f, std::polar(r, th));
      const Complex L = e.log_value;
      double arg = 0.0, dist = 0.0;
      if (w == Complex(0.0, 0.0)) {
        arg = L.imag();
        dist = std::exp(std::min(L.real(), kLogMaxDouble));
      } else if (L.real() >= log_w - 30.0) {
        const Complex t = 1.0 - w * std::exp(-L);
        arg = L.imag() + std::arg(t);
        dist = std::exp(std::min(L.real() + std::log(std::abs(t)), kLogMaxDouble));
      } else {
        const Complex t = 1.0 - std::exp(L) / w;
        arg = std::arg(-w) + std::arg(t);
        dist = std::abs(w) * std::abs(t);
      }
      min_dist = std::min(min_dist, dist);
      // refining toward a point on the curve would only exhaust the mesh
      if (min_dist < 1e-6 * scale) throw Error(ErrorKind::TargetOnCurve, "target lies on the image curve");
      return arg;
    };

    std::size_t used = 64;
    double total = 0.0;
    // Intervals are processed depth-first so the mesh only grows where needed.
    struct Span {
      double a, b, arg_a, arg_b;
    };
    std::vector<Span> stack;
    std::vector<double> args(65);
    for (std::size_t j = 0; j <= 64; ++j) {
      args[j] = j == 64 ? args[0] : sample(2.0 * kPi * static_cast<double>(j) / 64.0);
    }
    for (std::size_t j = 64; j-- > 0;) {
      stack.push_back({2.0 * kPi * static_cast<double>(j) / 64.0, 2.0 * kPi * static_cast<double>(j + 1) / 64.0, args[j],
                       args[j + 1]});
    }
    while (!stack.empty()) {
      const Span s = stack.back();
      stack.pop_back();
      const double d = wrap_angle(s.arg_b - s.arg_a);
      if (std::abs(d) < kPi / 2.0) {
        total += d;
        continue;
      }
      if (++used > max_samples) {
        throw Error(ErrorKind::MeshExhausted, "winding mesh exceeded " + std::to_string(max_samples) + " samples");
      }
      const double mid = 0.5 * (s.a + s.b);
      const double am = sample(mid);
      stack.push_back({mid, s.b, am, s.arg_b});
      stack.push_back({s.a, mid, s.arg_a, am});
    }
    const double turns = total / (2.0 * kPi);
    const double rounded = std::round(turns);
    if (std::abs(turns - rounded) > 1e-3) {
      throw Error(ErrorKind::MeshExhausted, "winding sum " + std::to_string(turns) + " is not an integer");
    }
    out.push_back(static_cast<long>(rounded));
  }
  return out;
}

/// Per-n outcome of the surrounding checks for gamma_n = {|z| = rho_n}.
struct CurveCheck {
  std::size_t n = 0;
  bool surrounds_image = false;       // f^n(D) lies inside gamma_n
  bool image_surrounds_next = false;  // f(gamma_n) surrounds the disc bounded by gamma_{n+1}
  double log_m = 0.0;                 // log m(rho_n), recomputed
  double next_log_radius = 0.0;       // log rho_{n+1}, or c(n+1) log R_{n+1} at the last step
  double winding = 0.0;               // winding of f(gamma_n) around 0 (a zero count may exceed any integer type)
  std::string winding_method;         // "argument-principle" or "zero-count"
};

struct CurveFamily {
  std::vector<double> circle_log_radii;
  Disc disc_D;
  std::vector<double> image_log_radii;  // index i: log bound of f^{i+1}(D)
  std::vector<CurveCheck> checks;
  std::string attestation = "user-asserted";
  struct Failure {
    std::size_t n;
    int condition;
  };
  std::optional<Failure> failure;

  bool all_pass() const { return !failure && !checks.empty(); }
};

inline std::string_view no_unbounded_fatou_label(const BakerCertificate& cert, const CurveFamily& curves) {
  if (cert.verified && curves.all_pass()) return "no unbounded Fatou components certified numerically on tested range";
  return "not certified on tested range";
}

/// Checks that gamma_n surrounds f^n(D) and that f(gamma_n) surrounds
/// gamma_{n+1}, for every n covered by the certificate.
inline CurveFamily verify_theorem4_curves(const FunctionSpec& f, const Disc& D, const BakerCertificate& cert,
                                          std::string attestation = "user-asserted") {
  if (!cert.verified) throw Error(ErrorKind::PreconditionViolated, "certificate is not verified");
  if (!(D.radius > 0.0)) throw Error(ErrorKind::PreconditionViolated, "disc radius must be > 0");
  if (f.zeros_on_negative_axis()) {
    // the closed disc must avoid every zero -r_n
    for (std::size_t n = 1;; ++n) {
      const double rn = f.zero_radius(n);
      if (rn > D.outer_radius() + 1.0) break;
      if (std::abs(Complex(-rn, 0.0) - D.center) <= D.radius) {
        throw Error(ErrorKind::PreconditionViolated, "disc contains the zero -r_" + std::to_string(n));
      }
    }
  }

  GrowthOracle oracle(f);
  CurveFamily fam;
  fam.disc_D = D;
  fam.circle_log_radii = cert.logrho;
  fam.attestation = std::move(attestation);
  const std::size_t N = cert.logrho.size();

  double image = std::log(D.outer_radius());
  for (std::size_t n = 1; n <= N; ++n) {
    image = oracle.log_M(image).log_value;
    fam.image_log_radii.push_back(image);
  }

  for (std::size_t n = 1; n <= N; ++n) {
    CurveCheck ck;
    ck.n = n;
    const double lrho = cert.logrho[n - 1];
    ck.surrounds_image = fam.image_log_radii[n - 1] < lrho;
    ck.log_m = oracle.log_m(lrho).log_value;
    ck.next_log_radius = n < N ? cert.logrho[n] : cert.c_schedule[n] * cert.logR[n];

    const double zeros = zero_count(f, lrho);
    if (zeros <= 256.0 && lrho <= kLogMaxDouble) {
      ck.winding = static_cast<double>(check_winding(f, lrho, {Complex(0.0, 0.0)}).front());
      ck.winding_method = "argument-principle";
    } else {
      ck.winding = zeros;
      ck.winding_method = "zero-count";
    }
    ck.image_surrounds_next = ck.log_m > ck.next_log_radius && ck.winding >= 1.0;

    if (!fam.failure) {
      if (!ck.surrounds_image) {
        fam.failure = CurveFamily::Failure{n, 1};
      } else if (!ck.image_surrounds_next) {
        fam.failure = CurveFamily::Failure{n, 2};
      }
    }
    fam.checks.push_back(ck);
  }
  return fam;
}

/// Throws SurroundFailure(n, condition) for the first failing check.
inline void require_surrounding(const CurveFamily& fam) {
  if (fam.failure) {
    throw Error(ErrorKind::SurroundFailure, "n = " + std::to_string(fam.failure->n) +
                                                 ", condition " + std::to_string(fam.failure->condition));
  }
}

struct Condition61 {
  bool holds_on_grid = false;
  double min_ratio = kInf;
  std::vector<double> ratios;
};

/// r f'(r)/f(r) >= C log f(r) / log r on every grid radius.
inline Condition61 check_condition_6_1(const FunctionSpec& f, const std::vector<double>& r_grid, double C) {
  if (!(C > 1.0)) throw Error(ErrorKind::PreconditionViolated, "C must be > 1");
  if (r_grid.empty()) throw Error(ErrorKind::PreconditionViolated, "r_grid is empty");
  Condition61 out;
  for (double r : r_grid) {
    // Both sides live on the positive ray, which carries no zeros; the grid
    // must start beyond the first zero radius.
    if (f.zeros_on_negative_axis()) {
      const double r1 = f.zero_radius(1);
      if (std::abs(r - r1) <= f.near_zero_rel * r1) {
        throw Error(ErrorKind::NearZero, "radius " + std::to_string(r) + " equals the first zero radius");
      }
      if (r < r1) throw Error(ErrorKind::PreconditionViolated, "radius below the first zero radius");
    }
    if (!(r > 1.0)) throw Error(ErrorKind::PreconditionViolated, "radius must exceed 1");
    const double lhs = log_derivative_on_ray(f, r);
    const double log_f = evaluate_log_on_ray(f, r, 0.0);
    const double rhs = C * log_f / std::log(r);
    const double ratio = lhs / rhs;
    out.ratios.push_back(ratio);
    out.min_ratio = std::min(out.min_ratio, ratio);
  }
  out.holds_on_grid = out.min_ratio >= 1.0;
  return out;
}

}  // namespace escape_lab
