#pragma once

// Serialization of specs, profiles, certificates and grids. Needs the
// single-header nlohmann JSON library on the include path.

#include "escape_lab/criteria_engine.hpp"
#include "escape_lab/escape_analysis.hpp"
#include "escape_lab/function_catalog.hpp"
#include "escape_lab/modulus_profiler.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace escape_lab {

using Json = nlohmann::ordered_json;

namespace io_detail {

inline double require_number(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw Error(ErrorKind::InvalidSpec, std::string("missing numeric field \"") + key + "\"");
  }
  return j.at(key).get<double>();
}

inline double number_or(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw Error(ErrorKind::InvalidSpec, std::string("field \"") + key + "\" must be a number");
  return j.at(key).get<double>();
}

inline std::size_t count_or(const Json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(ErrorKind::InvalidSpec, std::string("field \"") + key + "\" must be a nonnegative integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

// Non-finite doubles become null, the only JSON spelling available.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

inline Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Complex complex_from(const Json& j, const char* what) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw Error(ErrorKind::InvalidSpec, std::string(what) + " must be a number or a [re, im] pair");
}

}  // namespace io_detail

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Json to_json(const FunctionSpec& f) {
  Json j;
  j["kind"] = std::string(to_string(f.kind));
  switch (f.kind) {
    case FunctionKind::ScaledExp: j["lambda"] = f.lambda; break;
    case FunctionKind::CanonicalProduct:
      j["rho"] = f.rho;
      j["c"] = f.c;
      break;
    case FunctionKind::GeneralProduct:
      j["c"] = f.c;
      j["zero_scale"] = f.zeros.scale;
      j["zero_exponent"] = f.zeros.exponent;
      j["zero_prefix"] = f.zeros.prefix;
      break;
    default: break;
  }
  if (f.is_product()) {
    j["truncation_tol"] = f.truncation_tol;
    j["max_terms"] = f.max_terms;
    j["asymptotic_radius"] = f.asymptotic_radius;
    j["tail_policy"] = f.tail_policy == TailPolicy::Accelerated ? "accelerated" : "plain";
  }
  return j;
}

inline FunctionSpec function_spec_from_json(const Json& j) {
  using namespace io_detail;
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw Error(ErrorKind::InvalidSpec, "function needs a string field \"kind\"");
  }
  const auto kind = function_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorKind::InvalidSpec, "unknown function kind \"" + j.at("kind").get<std::string>() + "\"");
  FunctionSpec f;
  f.kind = *kind;
  switch (f.kind) {
    case FunctionKind::ScaledExp: f.lambda = number_or(j, "lambda", 1.0); break;
    case FunctionKind::QuarterCosh: f.rho = 0.25; break;
    case FunctionKind::CanonicalProduct:
      f.rho = require_number(j, "rho");
      f.c = number_or(j, "c", 1.0);
      break;
    case FunctionKind::GeneralProduct:
      f.c = number_or(j, "c", 1.0);
      f.zeros.scale = require_number(j, "zero_scale");
      f.zeros.exponent = require_number(j, "zero_exponent");
      if (j.contains("zero_prefix")) {
        if (!j.at("zero_prefix").is_array()) throw Error(ErrorKind::InvalidSpec, "zero_prefix must be an array");
        for (const auto& v : j.at("zero_prefix")) {
          if (!v.is_number()) throw Error(ErrorKind::InvalidSpec, "zero_prefix entries must be numbers");
          f.zeros.prefix.push_back(v.get<double>());
        }
      }
      break;
    default: break;
  }
  if (f.is_product()) {
    f.truncation_tol = number_or(j, "truncation_tol", f.truncation_tol);
    f.max_terms = count_or(j, "max_terms", f.max_terms);
    f.asymptotic_radius = number_or(j, "asymptotic_radius", f.asymptotic_radius);
    if (j.contains("tail_policy")) {
      const auto p = j.at("tail_policy").get<std::string>();
      if (p == "accelerated") {
        f.tail_policy = TailPolicy::Accelerated;
      } else if (p == "plain") {
        f.tail_policy = TailPolicy::PlainTruncation;
      } else {
        throw Error(ErrorKind::InvalidSpec, "tail_policy must be \"accelerated\" or \"plain\"");
      }
    }
  }
  f.validate();
  return f;
}

// ---- profiles ---------------------------------------------------------------

inline std::string profile_csv(const RadialProfile& p) {
  std::string out = "r,logM,logm,method\n";
  for (const auto& e : p.entries) {
    out += format_double(e.r) + "," + format_double(e.logM) + "," + format_double(e.logm) + "," +
           std::string(to_string(e.method)) + "\n";
  }
  return out;
}

inline RadialProfile parse_profile_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "r,logM,logm,method") {
    throw Error(ErrorKind::InvalidSpec, "profile CSV must start with the header r,logM,logm,method");
  }
  RadialProfile p;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<std::string, 4> cols;
    std::istringstream ls(line);
    for (auto& c : cols) {
      if (!std::getline(ls, c, ',')) throw Error(ErrorKind::InvalidSpec, "malformed profile row: " + line);
    }
    ProfileEntry e;
    e.r = std::stod(cols[0]);
    e.logM = std::stod(cols[1]);
    e.logm = std::stod(cols[2]);
    const auto m = modulus_method_from_string(cols[3]);
    if (!m) throw Error(ErrorKind::InvalidSpec, "unknown method in profile row: " + cols[3]);
    e.method = *m;
    e.min_method = *m;
    p.entries.push_back(e);
  }
  return p;
}

inline Json to_json(const OrderEstimate& o) { return Json{{"rho", o.rho}, {"ci", o.ci}, {"entries_used", o.used}}; }

inline Json to_json(const GrowthReport& g) {
  using io_detail::number;
  Json samples = Json::array();
  for (const auto& s : g.ratio_c_samples) samples.push_back(Json{{"r", s.r}, {"value", number(s.value)}});
  Json c15{{"holds", g.cond_1_5.holds},
           {"epsilon", g.cond_1_5.epsilon},
           {"R", g.cond_1_5.R},
           {"first_violation_r", g.cond_1_5.first_violation_r ? Json(*g.cond_1_5.first_violation_r) : Json(nullptr)},
           {"entries_tested", g.cond_1_5.tested}};
  Json c16{{"holds", g.cond_1_6.holds}, {"c_estimate", g.cond_1_6.c_estimate}, {"dispersion", g.cond_1_6.dispersion}};
  return Json{{"order_estimate", g.order_estimate},
              {"order_ci_halfwidth", g.order_ci_halfwidth},
              {"ratio_c_samples", samples},
              {"cond_1_5", c15},
              {"cond_1_6", c16},
              {"scope", "verdicts hold on the sampled ladder only"}};
}

inline Json to_json(const Condition61& c) {
  return Json{{"holds_on_grid", c.holds_on_grid}, {"min_ratio", io_detail::number(c.min_ratio)},
              {"ratios", io_detail::numbers(c.ratios)}};
}

// ---- certificates -----------------------------------------------------------

inline Json to_json(const BakerCertificate& c) {
  using namespace io_detail;
  Json phase = Json::array();
  for (bool b : c.phase_resolved) phase.push_back(b);
  return Json{{"log_base", "e"},
              {"logR", numbers(c.logR)},
              {"logrho", numbers(c.logrho)},
              {"c", numbers(c.c_schedule)},
              {"margins", numbers(c.margins)},
              {"verified", c.verified},
              {"extrapolated_from", c.extrapolated_from ? Json(*c.extrapolated_from) : Json(nullptr)},
              {"no_candidate", c.no_candidate ? Json(*c.no_candidate) : Json(nullptr)},
              {"phase_resolved", phase},
              {"claim", c.verified ? "B_D(f), B(f) and I(f) connected: certified on tested range" : "not certified"}};
}

inline Json to_json(const CurveFamily& fam, const BakerCertificate& cert) {
  using namespace io_detail;
  Json checks = Json::array();
  for (const auto& k : fam.checks) {
    checks.push_back(Json{{"n", k.n},
                          {"surrounds_image", k.surrounds_image},
                          {"image_surrounds_next", k.image_surrounds_next},
                          {"log_m", number(k.log_m)},
                          {"next_log_radius", number(k.next_log_radius)},
                          {"winding", number(k.winding)},
                          {"winding_method", k.winding_method}});
  }
  Json failure = fam.failure ? Json{{"n", fam.failure->n}, {"condition", fam.failure->condition}} : Json(nullptr);
  return Json{{"log_base", "e"},
              {"circle_log_radii", numbers(fam.circle_log_radii)},
              {"disc_D", Json{{"center", complex_json(fam.disc_D.center)}, {"radius", fam.disc_D.radius}}},
              {"image_log_radii", numbers(fam.image_log_radii)},
              {"checks", checks},
              {"failure", failure},
              {"julia_attestation", fam.attestation},
              {"label", std::string(no_unbounded_fatou_label(cert, fam))}};
}

// ---- grids ------------------------------------------------------------------

inline Json to_json(const ConnectivityReport& r) {
  Json boxes = Json::array();
  for (const auto& b : r.hole_bounding_boxes) {
    boxes.push_back(Json{{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}, {"pixels", b.pixels}});
  }
  return Json{{"escaping_pixels", r.escaping_pixels},
              {"escaping_components", r.escaping_components},
              {"hole_components", r.hole_components},
              {"largest_component_fraction", r.largest_component_fraction},
              {"hole_bounding_boxes", boxes},
              {"note", "holes are candidate holes in the escaping set at grid resolution"}};
}

inline Json to_json(const GridSpec& g) {
  return Json{{"center", io_detail::complex_json(g.center)},
              {"width", g.width},
              {"height", g.height},
              {"nx", g.nx},
              {"ny", g.ny},
              {"max_iter", g.max_iter},
              {"bailout", g.bailout},
              {"confirm_steps", g.confirm_steps}};
}

inline std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline Json grid_summary(const EscapeGrid& g, const FunctionSpec& f, bool fast_done, bool bd_done) {
  using namespace io_detail;
  std::size_t counts[3] = {0, 0, 0};
  std::size_t fast = 0, bd = 0;
  for (std::size_t i = 0; i < g.cls.size(); ++i) {
    ++counts[static_cast<int>(g.cls[i])];
    fast += g.fast_mask[i];
    bd += g.bd_mask[i];
  }
  const auto inc = check_mask_inclusion(g);
  Json j{{"grid", to_json(g.spec)},
         {"function", to_json(f)},
         {"function_hash", hex64(g.function_hash)},
         {"counts", Json{{"Escaping", counts[0]}, {"Bounded", counts[1]}, {"Undetermined", counts[2]}}},
         {"note", "classes are finite-iteration approximations of the escaping set"}};
  if (fast_done) {
    j["fast"] = Json{{"logR", g.fast_logR},
                     {"L_max", g.L_max},
                     {"ladder", numbers(g.fast_ladder.entries)},
                     {"ladder_overflow", g.fast_ladder.overflow},
                     {"marked", fast}};
  }
  if (bd_done) {
    j["bd"] = Json{{"disc_D", Json{{"center", complex_json(g.bd_disc.center)}, {"radius", g.bd_disc.radius}}},
                   {"include_n0", g.include_n0},
                   {"ladder", numbers(g.bd_ladder.entries)},
                   {"ladder_overflow", g.bd_ladder.overflow},
                   {"marked", bd}};
  }
  j["mask_inclusion"] = Json{{"bd_not_fast", inc.bd_not_fast}, {"fast_not_escaping", inc.fast_not_escaping}};
  return j;
}

/// Binary PPM (P6).
inline std::string ppm(std::size_t nx, std::size_t ny, const std::vector<std::array<std::uint8_t, 3>>& rgb) {
  std::string out = "P6\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n255\n";
  out.reserve(out.size() + rgb.size() * 3);
  for (const auto& p : rgb) out.append(reinterpret_cast<const char*>(p.data()), 3);
  return out;
}

/// Escaping pixels shade from light (early escape) to dark, Bounded is
/// black, Undetermined is gray.
inline std::string class_ppm(const EscapeGrid& g) {
  std::vector<std::array<std::uint8_t, 3>> rgb(g.cls.size());
  const double denom = static_cast<double>(std::max<std::size_t>(1, g.spec.max_iter));
  for (std::size_t i = 0; i < g.cls.size(); ++i) {
    switch (g.cls[i]) {
      case PixelClass::Escaping: {
        const double t = std::sqrt(std::min(1.0, static_cast<double>(g.step[i]) / denom));
        rgb[i] = {static_cast<std::uint8_t>(std::lround(255.0 - 185.0 * t)),
                  static_cast<std::uint8_t>(std::lround(235.0 - 185.0 * t)),
                  static_cast<std::uint8_t>(std::lround(170.0 - 130.0 * t))};
        break;
      }
      case PixelClass::Bounded: rgb[i] = {0, 0, 0}; break;
      case PixelClass::Undetermined: rgb[i] = {128, 128, 128}; break;
    }
  }
  return ppm(g.spec.nx, g.spec.ny, rgb);
}

inline std::string mask_ppm(const std::vector<std::uint8_t>& mask, std::size_t nx, std::size_t ny) {
  std::vector<std::array<std::uint8_t, 3>> rgb(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const std::uint8_t v = mask[i] ? 255 : 0;
    rgb[i] = {v, v, v};
  }
  return ppm(nx, ny, rgb);
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace escape_lab
