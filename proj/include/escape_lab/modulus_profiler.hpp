#pragma once

#include "escape_lab/core.hpp"
#include "escape_lab/function_catalog.hpp"
#include "escape_lab/worker_pool.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace escape_lab {

enum class ModulusMethod { AngularSampled, PositiveAxisShortcut, NegativeAxisShortcut, LogDomain };

inline std::string_view to_string(ModulusMethod m) {
  switch (m) {
    case ModulusMethod::AngularSampled: return "AngularSampled";
    case ModulusMethod::PositiveAxisShortcut: return "PositiveAxisShortcut";
    case ModulusMethod::NegativeAxisShortcut: return "NegativeAxisShortcut";
    case ModulusMethod::LogDomain: return "LogDomain";
  }
  return "Unknown";
}

inline std::optional<ModulusMethod> modulus_method_from_string(std::string_view s) {
  for (auto m : {ModulusMethod::AngularSampled, ModulusMethod::PositiveAxisShortcut,
                 ModulusMethod::NegativeAxisShortcut, ModulusMethod::LogDomain}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

struct ModulusOptions {
  // Disable the axis shortcuts and always search the circle.
  bool force_sampling = false;
  double bracket_tol = 1e-6;
  // Candidates refined after the coarse pass.
  std::size_t refine_candidates = 3;
};

/// Extremum of log|f| on a circle.
struct ModulusValue {
  double log_value = 0.0;
  double arg = 0.0;
  ModulusMethod method = ModulusMethod::AngularSampled;
  bool phase_resolved = true;
};

namespace detail {

// Golden-section search for the extremum of g on [lo, hi].
template <class G>
std::pair<double, double> golden_section(G&& g, double lo, double hi, bool maximize, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double sign = maximize ? 1.0 : -1.0;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = sign * g(x1), f2 = sign * g(x2);
  while (b - a > tol) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = sign * g(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = sign * g(x2);
    }
  }
  return f1 >= f2 ? std::pair{x1, sign * f1} : std::pair{x2, sign * f2};
}

// Coarse pass over k equispaced angles, then refinement around the best few.
template <class G>
ModulusValue angular_extremum(G&& g, std::size_t k, bool maximize, double widen, const ModulusOptions& opt) {
  std::vector<std::pair<double, double>> samples(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double th = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(k);
    samples[j] = {g(th), th};
  }
  auto better = [maximize](const auto& a, const auto& b) {
    return maximize ? a.first > b.first : a.first < b.first;
  };
  std::vector<std::pair<double, double>> ranked = samples;
  const std::size_t keep = std::min(opt.refine_candidates, k);
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), better);

  ModulusValue best{ranked.front().first, ranked.front().second, ModulusMethod::AngularSampled};
  const double half = widen * 2.0 * kPi / static_cast<double>(k);
  for (std::size_t i = 0; i < keep; ++i) {
    const double c = ranked[i].second;
    const auto [th, v] = golden_section(g, c - half, c + half, maximize, opt.bracket_tol);
    if (maximize ? v > best.log_value : v < best.log_value) {
      best.log_value = v;
      best.arg = wrap_angle(th);
    }
  }
  return best;
}

inline double log_abs_at(const FunctionSpec& f, double r, double th) {
  return evaluate(f, std::polar(r, th)).log_abs;
}

// Relative distance from r to the nearest tabulated zero radius.
inline double relative_zero_distance(const FunctionSpec& f, double r) {
  if (!f.zeros_on_negative_axis()) return kInf;
  double best = kInf;
  std::size_t guess = 1;
  if (f.kind == FunctionKind::QuarterCosh) {
    guess = static_cast<std::size_t>(std::max(1.0, std::floor(std::pow(r / (4.0 * std::pow(kPi, 4)), 0.25) + 0.5)));
  } else {
    const FunctionSpec g = f.normalized();
    for (std::size_t n = 1; n <= g.zeros.prefix.size(); ++n) {
      best = std::min(best, std::abs(r - g.zeros.prefix[n - 1]) / g.zeros.prefix[n - 1]);
    }
    const double est = std::pow(r / g.zeros.scale, 1.0 / g.zeros.exponent);
    guess = static_cast<std::size_t>(std::clamp(est, 1.0, 1e15));
    if (g.zeros.generator) {
      guess = std::min<std::size_t>(guess, g.max_terms);
      while (guess > 1 && g.zeros.radius(guess) > r) --guess;
    }
  }
  for (std::size_t n = guess > 2 ? guess - 2 : 1; n <= guess + 2; ++n) {
    const double rn = f.zero_radius(n);
    best = std::min(best, std::abs(r - rn) / rn);
  }
  return best;
}

}  // namespace detail

/// Maximum modulus log M(r, f).
///
/// Throws OverflowDomain when M(r) is beyond the double range; the
/// log-domain path (log_max_modulus) is then the one to use.
inline ModulusValue max_modulus(const FunctionSpec& f, double r, std::size_t k = 64, const ModulusOptions& opt = {}) {
  if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::PreconditionViolated, "radius must be finite and > 0");
  if (k < 16) throw Error(ErrorKind::PreconditionViolated, "max_modulus needs k >= 16");
  ModulusValue out;
  if (f.has_nonnegative_coefficients() && !opt.force_sampling) {
    out = {log_modulus_positive_axis(f, std::log(r)).value, 0.0, ModulusMethod::PositiveAxisShortcut};
  } else {
    out = detail::angular_extremum([&](double th) { return detail::log_abs_at(f, r, th); }, k, true, 1.0, opt);
  }
  if (out.log_value > kLogMaxDouble) throw Error(ErrorKind::OverflowDomain, "M(r) exceeds the double range");
  return out;
}

/// Minimum modulus log m(r, f).
///
/// Throws AtZero when r equals a zero radius to relative 1e-12 (the
/// minimum is then -infinity).
inline ModulusValue min_modulus(const FunctionSpec& f, double r, std::size_t k = 256, const ModulusOptions& opt = {}) {
  if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::PreconditionViolated, "radius must be finite and > 0");
  if (k < 64) throw Error(ErrorKind::PreconditionViolated, "min_modulus needs k >= 64");
  const double zero_dist = detail::relative_zero_distance(f, r);
  if (zero_dist <= 1e-12) throw Error(ErrorKind::AtZero, "radius " + std::to_string(r) + " is a zero radius");
  ModulusValue out;
  const bool shortcut = f.zeros_on_negative_axis() || f.kind == FunctionKind::ScaledExp;
  if (shortcut && !opt.force_sampling) {
    const auto v = log_modulus_negative_axis(f, std::log(r), false);
    out = {v.value, kPi, ModulusMethod::NegativeAxisShortcut, v.phase_resolved};
  } else {
    const double widen = zero_dist < 0.05 ? 4.0 : 1.0;
    out = detail::angular_extremum([&](double th) { return detail::log_abs_at(f, r, th); }, k, false, widen, opt);
  }
  if (std::abs(out.log_value) > kLogMaxDouble) throw Error(ErrorKind::OverflowDomain, "m(r) outside the double range");
  return out;
}

/// log M(e^{log_r}, f) for radii that need not be representable.
///
/// Throws OverflowDomain when neither a closed form nor summation reaches
/// this radius (closed forms without an axis shortcut, generator products).
inline ModulusValue log_max_modulus(const FunctionSpec& f, double log_r, std::size_t k = 64) {
  if (f.has_nonnegative_coefficients()) {
    try {
      const auto v = log_modulus_positive_axis(f, log_r);
      if (!std::isfinite(v.value)) throw Error(ErrorKind::OverflowDomain, "log M not representable");
      const bool direct = log_r <= kLogMaxDouble && v.value <= kLogMaxDouble;
      return {v.value, 0.0, direct ? ModulusMethod::PositiveAxisShortcut : ModulusMethod::LogDomain};
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonConvergentProduct) throw Error(ErrorKind::OverflowDomain, e.what());
      throw;
    }
  }
  if (log_r > kLogMaxDouble) throw Error(ErrorKind::OverflowDomain, "radius not representable");
  const double r = std::exp(log_r);
  auto v = detail::angular_extremum([&](double th) { return detail::log_abs_at(f, r, th); }, k, true, 1.0, {});
  if (!std::isfinite(v.log_value)) throw Error(ErrorKind::OverflowDomain, "log M not representable");
  if (v.log_value > kLogMaxDouble) v.method = ModulusMethod::LogDomain;
  return v;
}

/// log m(e^{log_r}, f) for radii that need not be representable.
inline ModulusValue log_min_modulus(const FunctionSpec& f, double log_r, std::size_t k = 256) {
  const bool shortcut = f.zeros_on_negative_axis() || f.kind == FunctionKind::ScaledExp;
  if (shortcut) {
    if (log_r <= kLogMaxDouble && detail::relative_zero_distance(f, std::exp(log_r)) <= 1e-12) {
      throw Error(ErrorKind::AtZero, "radius is a zero radius");
    }
    try {
      const auto v = log_modulus_negative_axis(f, log_r, false);
      const bool direct = log_r <= kLogMaxDouble && std::abs(v.value) <= kLogMaxDouble;
      return {v.value, kPi, direct ? ModulusMethod::NegativeAxisShortcut : ModulusMethod::LogDomain, v.phase_resolved};
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonConvergentProduct) throw Error(ErrorKind::OverflowDomain, e.what());
      throw;
    }
  }
  if (log_r > kLogMaxDouble) throw Error(ErrorKind::OverflowDomain, "radius not representable");
  const double r = std::exp(log_r);
  auto v = detail::angular_extremum([&](double th) { return detail::log_abs_at(f, r, th); }, k, false, 1.0, {});
  if (std::abs(v.log_value) > kLogMaxDouble) v.method = ModulusMethod::LogDomain;
  return v;
}

struct ProfileEntry {
  double r = 0.0;
  double logM = 0.0;
  double logm = 0.0;
  ModulusMethod method = ModulusMethod::AngularSampled;  // method used for logM
  ModulusMethod min_method = ModulusMethod::AngularSampled;
  bool perturbed = false;  // r moved off a zero radius by relative 1e-6 (2e-6 at most)
};

struct RadialProfile {
  std::vector<ProfileEntry> entries;
  std::size_t angular_resolution = 0;
};

struct ProfileOptions {
  std::size_t k_max = 64;
  std::size_t k_min = 256;
  bool include_doubled = true;
};

/// Base radii r_min * 10^{i/ppd} up to r_max, plus 2r for every base radius
/// with 2r <= r_max.
inline std::vector<double> profile_radii(double r_min, double r_max, std::size_t points_per_decade,
                                         bool include_doubled = true) {
  if (!(r_min > 0.0 && r_min < r_max) || !std::isfinite(r_max)) {
    throw Error(ErrorKind::PreconditionViolated, "need 0 < r_min < r_max");
  }
  if (points_per_decade < 4) throw Error(ErrorKind::PreconditionViolated, "points_per_decade must be >= 4");
  std::vector<double> base;
  for (std::size_t i = 0;; ++i) {
    const double r = r_min * std::pow(10.0, static_cast<double>(i) / static_cast<double>(points_per_decade));
    if (r > r_max * (1.0 + 1e-12)) break;
    base.push_back(std::min(r, r_max));
  }
  std::vector<double> all = base;
  if (include_doubled) {
    for (double r : base) {
      if (2.0 * r <= r_max * (1.0 + 1e-12)) all.push_back(2.0 * r);
    }
  }
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double r : all) {
    if (out.empty() || r > out.back() * (1.0 + 1e-12)) out.push_back(r);
  }
  return out;
}

namespace detail {

inline ProfileEntry profile_entry(const FunctionSpec& f, double r, const ProfileOptions& opt) {
  // Where zeros are denser than 1e-6 a shifted radius can land on another
  // zero, so later offsets alternate sides and widen.
  static constexpr std::array<double, 5> kOffsets = {1e-6, -1e-6, 1.5e-6, -1.5e-6, 2e-6};
  ProfileEntry e;
  e.r = r;
  std::size_t attempt = 0;
  for (;;) {
    try {
      const auto m = min_modulus(f, e.r, opt.k_min);
      e.logm = m.log_value;
      e.min_method = m.method;
      break;
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::AtZero && attempt < kOffsets.size()) {
        e.r = r * (1.0 + kOffsets[attempt++]);
        e.perturbed = true;
        continue;
      }
      if (err.kind() != ErrorKind::OverflowDomain) throw;
      const auto m = log_min_modulus(f, std::log(e.r), opt.k_min);
      e.logm = m.log_value;
      e.min_method = ModulusMethod::LogDomain;
      break;
    }
  }
  try {
    const auto M = max_modulus(f, e.r, opt.k_max);
    e.logM = M.log_value;
    e.method = M.method;
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::OverflowDomain) throw;
    e.logM = log_max_modulus(f, std::log(e.r), opt.k_max).log_value;
    e.method = ModulusMethod::LogDomain;
  }
  if (e.min_method == ModulusMethod::LogDomain) e.method = ModulusMethod::LogDomain;
  return e;
}

}  // namespace detail

/// Samples log M and log m over a geometric ladder (with doubled radii).
inline RadialProfile build_profile(const FunctionSpec& f, double r_min, double r_max, std::size_t points_per_decade,
                                   const ProfileOptions& opt = {}, WorkerPool* pool = nullptr) {
  f.validate();
  const auto radii = profile_radii(r_min, r_max, points_per_decade, opt.include_doubled);
  RadialProfile p;
  p.angular_resolution = opt.k_max;
  p.entries.resize(radii.size());
  for_each_index(pool, radii.size(), [&](std::size_t i) { p.entries[i] = detail::profile_entry(f, radii[i], opt); });
  return p;
}

struct OrderEstimate {
  double rho = 0.0;
  double ci = 0.0;
  std::size_t used = 0;
};

/// Least-squares slope of log log M against log r over the last
/// tail_fraction of the entries; ci is twice the slope's standard error.
inline OrderEstimate estimate_order(const RadialProfile& p, double tail_fraction = 0.5) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw Error(ErrorKind::PreconditionViolated, "tail_fraction must lie in (0, 1]");
  }
  const std::size_t n = p.entries.size();
  const auto take = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n)));
  std::vector<double> xs, ys;
  for (std::size_t i = n - std::min(take, n); i < n; ++i) {
    const auto& e = p.entries[i];
    if (e.logM > 1.0 && std::isfinite(e.logM)) {
      xs.push_back(std::log(e.r));
      ys.push_back(std::log(e.logM));
    }
  }
  if (xs.size() < 8) {
    throw Error(ErrorKind::InsufficientGrowth,
                "only " + std::to_string(xs.size()) + " tail entries have log M > 1 (need 8)");
  }
  const double m = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double res = ys[i] - intercept - slope * xs[i];
    rss += res * res;
  }
  const double se = std::sqrt(rss / (m - 2.0) / sxx);
  return {slope, 2.0 * se, xs.size()};
}

struct Condition15 {
  bool holds = true;
  double epsilon = 0.5;
  double R = 0.0;
  std::optional<double> first_violation_r;
  std::size_t tested = 0;
};

/// log log M(r) < (log r)^{1/2} / (log log r)^epsilon at every entry with
/// r > max(R, e^e).
inline Condition15 check_condition_1_5(const RadialProfile& p, double epsilon, double R) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorKind::PreconditionViolated, "epsilon must lie in (0, 1)");
  Condition15 c;
  c.epsilon = epsilon;
  c.R = R;
  const double floor_r = std::max(R, std::exp(std::exp(1.0)));
  for (const auto& e : p.entries) {
    if (!(e.r > floor_r)) continue;
    ++c.tested;
    const double lr = std::log(e.r);
    // log M <= 0 leaves log log M undefined and the inequality trivially true
    if (e.logM <= 0.0) continue;
    const double lhs = std::log(e.logM);
    const double rhs = std::sqrt(lr) / std::pow(std::log(lr), epsilon);
    if (!(lhs < rhs)) {
      c.holds = false;
      if (!c.first_violation_r) c.first_violation_r = e.r;
    }
  }
  return c;
}

struct RatioSample {
  double r = 0.0;
  double value = 0.0;
};

struct Condition16 {
  bool holds = false;
  double c_estimate = 0.0;
  double dispersion = 0.0;
  std::vector<RatioSample> samples;  // every (r, 2r) pair in the profile
};

/// All ratios log M(2r) / log M(r) available in the profile.
inline std::vector<RatioSample> ratio_samples(const RadialProfile& p) {
  std::vector<RatioSample> out;
  const auto& es = p.entries;
  std::size_t j = 0;
  for (std::size_t i = 0; i < es.size(); ++i) {
    const double target = 2.0 * es[i].r;
    while (j < es.size() && es[j].r < target * (1.0 - 1e-5)) ++j;
    if (j < es.size() && std::abs(es[j].r / target - 1.0) <= 1e-5) {
      out.push_back({es[i].r, es[j].logM / es[i].logM});
    }
  }
  return out;
}

/// log M(2r) / log M(r) -> c, judged on the pairs in the top two decades.
inline Condition16 check_condition_1_6(const RadialProfile& p) {
  Condition16 c;
  c.samples = ratio_samples(p);
  if (c.samples.empty()) throw Error(ErrorKind::MissingPairs, "profile has no (r, 2r) pairs");
  const double r_top = c.samples.back().r;
  std::vector<double> top;
  for (const auto& s : c.samples) {
    if (s.r >= r_top / 100.0 * (1.0 - 1e-12)) top.push_back(s.value);
  }
  double sum = 0.0;
  for (double v : top) sum += v;
  c.c_estimate = sum / static_cast<double>(top.size());
  for (double v : top) c.dispersion = std::max(c.dispersion, std::abs(v - c.c_estimate));
  c.holds = c.dispersion < 0.02 * c.c_estimate;
  return c;
}

struct GrowthReport {
  double order_estimate = 0.0;
  double order_ci_halfwidth = 0.0;
  std::vector<RatioSample> ratio_c_samples;
  Condition15 cond_1_5;
  Condition16 cond_1_6;
};

inline GrowthReport growth_report(const RadialProfile& p, double tail_fraction, double epsilon, double R) {
  GrowthReport g;
  const auto o = estimate_order(p, tail_fraction);
  g.order_estimate = o.rho;
  g.order_ci_halfwidth = o.ci;
  g.cond_1_5 = check_condition_1_5(p, epsilon, R);
  g.cond_1_6 = check_condition_1_6(p);
  g.ratio_c_samples = g.cond_1_6.samples;
  return g;
}

}  // namespace escape_lab
