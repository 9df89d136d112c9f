#pragma once

#include "escape_lab/criteria_engine.hpp"
#include "escape_lab/escape_analysis.hpp"
#include "escape_lab/function_catalog.hpp"
#include "escape_lab/io.hpp"
#include "escape_lab/modulus_profiler.hpp"
#include "escape_lab/worker_pool.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace escape_lab {

inline constexpr const char* kVersion = "0.1.0";

enum class Command { Profile, Order, Certify, Curves, Grid, Report };

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::Profile: return "profile";
    case Command::Order: return "order";
    case Command::Certify: return "certify";
    case Command::Curves: return "curves";
    case Command::Grid: return "grid";
    case Command::Report: return "report";
  }
  return "unknown";
}

struct ProfileParams {
  double r_min = 1e2;
  double r_max = 1e8;
  std::size_t points_per_decade = 4;
  std::size_t k_max = 64;
  std::size_t k_min = 256;
  double tail_fraction = 0.5;
};

struct Condition61Params {
  std::vector<double> r_grid;
  double C = 1.5;
};

struct ReportParams {
  double epsilon = 0.5;
  double R = std::exp(std::exp(1.0));
  std::optional<Condition61Params> condition_6_1;
};

struct CertifyParams {
  double logR1 = std::log(1e3);
  std::vector<double> c_schedule;  // filled to n_max + 1 entries
  std::size_t n_max = 3;
};

struct CurvesParams {
  Disc disc{{-1.5, 0.0}, 0.1};
  std::string attestation = "user-asserted";
};

struct GridParams {
  GridSpec spec;
  std::optional<double> logR;  // enables the fast-escaping pass
  std::size_t L_max = 2;
  std::optional<Disc> disc;    // enables the B_D pass
  bool include_n0 = false;
  std::size_t pixel_budget = kDefaultPixelBudget;
};

struct RunConfig {
  FunctionSpec function;
  Command command = Command::Profile;
  ProfileParams profile;
  ReportParams report;
  CertifyParams certify;
  CurvesParams curves;
  GridParams grid;
  std::string output_dir = "escape_lab_out";
  std::int64_t seed = 0;
};

/// Invalid configuration: maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace run_detail {

using namespace io_detail;

inline const Json& block(const Json& j, const char* key) {
  static const Json empty = Json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw Error(ErrorKind::InvalidSpec, std::string("\"") + key + "\" must be an object");
  return j.at(key);
}

inline Disc disc_from(const Json& j) {
  Disc d;
  if (!j.contains("center")) throw Error(ErrorKind::InvalidSpec, "disc needs \"center\"");
  d.center = complex_from(j.at("center"), "disc center");
  d.radius = require_number(j, "radius");
  if (!(d.radius > 0.0)) throw Error(ErrorKind::InvalidSpec, "disc radius must be > 0");
  return d;
}

inline Json disc_json(const Disc& d) { return Json{{"center", complex_json(d.center)}, {"radius", d.radius}}; }

inline void parse_profile(const Json& j, ProfileParams& p) {
  p.r_min = number_or(j, "r_min", p.r_min);
  p.r_max = number_or(j, "r_max", p.r_max);
  p.points_per_decade = count_or(j, "points_per_decade", p.points_per_decade);
  p.k_max = count_or(j, "k_max", p.k_max);
  p.k_min = count_or(j, "k_min", p.k_min);
  p.tail_fraction = number_or(j, "tail_fraction", p.tail_fraction);
  if (!(p.r_min > 0.0 && p.r_min < p.r_max) || !std::isfinite(p.r_max)) {
    throw Error(ErrorKind::InvalidSpec, "profile needs 0 < r_min < r_max");
  }
  if (p.points_per_decade < 4) throw Error(ErrorKind::InvalidSpec, "points_per_decade must be >= 4");
  if (p.k_max < 16) throw Error(ErrorKind::InvalidSpec, "k_max must be >= 16");
  if (p.k_min < 64) throw Error(ErrorKind::InvalidSpec, "k_min must be >= 64");
  if (!(p.tail_fraction > 0.0 && p.tail_fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidSpec, "tail_fraction must lie in (0, 1]");
  }
}

inline void parse_certify(const Json& j, CertifyParams& c) {
  if (j.contains("R1")) c.logR1 = std::log(require_number(j, "R1"));
  c.logR1 = number_or(j, "logR1", c.logR1);
  c.n_max = count_or(j, "n_max", c.n_max);
  if (c.n_max == 0) throw Error(ErrorKind::InvalidSpec, "n_max must be >= 1");
  if (!(c.logR1 > 0.0) || !std::isfinite(c.logR1)) throw Error(ErrorKind::InvalidSpec, "logR1 must be > 0");
  c.c_schedule.clear();
  if (!j.contains("c_schedule") || j.at("c_schedule").is_number()) {
    c.c_schedule.assign(c.n_max + 1, number_or(j, "c_schedule", 2.0));
  } else if (j.at("c_schedule").is_array()) {
    for (const auto& v : j.at("c_schedule")) {
      if (!v.is_number()) throw Error(ErrorKind::InvalidSpec, "c_schedule entries must be numbers");
      c.c_schedule.push_back(v.get<double>());
    }
  } else {
    throw Error(ErrorKind::InvalidSpec, "c_schedule must be a number or an array");
  }
  if (c.c_schedule.size() < c.n_max + 1) throw Error(ErrorKind::InvalidSpec, "c_schedule needs n_max + 1 entries");
  for (double v : c.c_schedule) {
    if (!(v > 1.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidSpec, "every c(n) must be > 1");
  }
}

inline void parse_grid(const Json& j, GridParams& g) {
  if (j.contains("center")) g.spec.center = complex_from(j.at("center"), "grid center");
  g.spec.width = number_or(j, "width", g.spec.width);
  g.spec.height = number_or(j, "height", g.spec.height);
  g.spec.nx = count_or(j, "nx", g.spec.nx);
  g.spec.ny = count_or(j, "ny", g.spec.ny);
  g.spec.max_iter = count_or(j, "max_iter", g.spec.max_iter);
  g.spec.bailout = number_or(j, "bailout", g.spec.bailout);
  g.spec.confirm_steps = count_or(j, "confirm_steps", g.spec.confirm_steps);
  g.pixel_budget = count_or(j, "pixel_budget", g.pixel_budget);
  if (j.contains("logR") && !j.at("logR").is_null()) g.logR = require_number(j, "logR");
  g.L_max = count_or(j, "L_max", g.L_max);
  if (g.L_max == 0) throw Error(ErrorKind::InvalidSpec, "L_max must be >= 1");
  if (j.contains("disc") && !j.at("disc").is_null()) g.disc = disc_from(j.at("disc"));
  if (j.contains("include_n0")) {
    if (!j.at("include_n0").is_boolean()) throw Error(ErrorKind::InvalidSpec, "include_n0 must be a boolean");
    g.include_n0 = j.at("include_n0").get<bool>();
  }
  g.spec.validate(g.pixel_budget);
}

}  // namespace run_detail

/// Parses a run configuration, or the "config" block of a manifest.
/// Every parameter is validated here, before any computation.
inline RunConfig parse_config(const Json& input) {
  using namespace run_detail;
  try {
    const Json& j = (input.contains("config") && input.contains("version")) ? input.at("config") : input;
    if (!j.is_object()) throw Error(ErrorKind::InvalidSpec, "config must be a JSON object");
    RunConfig cfg;
    if (!j.contains("command") || !j.at("command").is_string()) {
      throw Error(ErrorKind::InvalidSpec, "config needs a string field \"command\"");
    }
    const std::string cmd = j.at("command").get<std::string>();
    bool known = false;
    for (auto c : {Command::Profile, Command::Order, Command::Certify, Command::Curves, Command::Grid, Command::Report}) {
      if (to_string(c) == cmd) {
        cfg.command = c;
        known = true;
      }
    }
    if (!known) throw Error(ErrorKind::InvalidSpec, "unknown command \"" + cmd + "\"");
    if (!j.contains("function")) throw Error(ErrorKind::InvalidSpec, "config needs a \"function\" block");
    cfg.function = function_spec_from_json(j.at("function"));
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_integer()) throw Error(ErrorKind::InvalidSpec, "seed must be an integer");
      cfg.seed = j.at("seed").get<std::int64_t>();
    }

    switch (cfg.command) {
      case Command::Profile:
      case Command::Order: parse_profile(block(j, cmd.c_str()), cfg.profile); break;
      case Command::Report: {
        const Json& b = block(j, "report");
        parse_profile(b, cfg.profile);
        cfg.report.epsilon = number_or(b, "epsilon", cfg.report.epsilon);
        cfg.report.R = number_or(b, "R", cfg.report.R);
        if (!(cfg.report.epsilon > 0.0 && cfg.report.epsilon < 1.0)) {
          throw Error(ErrorKind::InvalidSpec, "epsilon must lie in (0, 1)");
        }
        if (b.contains("condition_6_1") && !b.at("condition_6_1").is_null()) {
          const Json& c = b.at("condition_6_1");
          Condition61Params p;
          p.C = number_or(c, "C", p.C);
          if (!c.contains("r_grid") || !c.at("r_grid").is_array() || c.at("r_grid").empty()) {
            throw Error(ErrorKind::InvalidSpec, "condition_6_1 needs a nonempty r_grid array");
          }
          for (const auto& v : c.at("r_grid")) p.r_grid.push_back(v.get<double>());
          if (!(p.C > 1.0)) throw Error(ErrorKind::InvalidSpec, "condition_6_1 C must be > 1");
          cfg.report.condition_6_1 = p;
        }
        break;
      }
      case Command::Certify: parse_certify(block(j, "certify"), cfg.certify); break;
      case Command::Curves: {
        const Json& b = block(j, "curves");
        parse_certify(b, cfg.certify);
        if (b.contains("disc")) cfg.curves.disc = disc_from(b.at("disc"));
        if (b.contains("attestation")) {
          cfg.curves.attestation = b.at("attestation").get<std::string>();
          if (cfg.curves.attestation != "user-asserted" && cfg.curves.attestation != "escape-boundary-witnessed") {
            throw Error(ErrorKind::InvalidSpec, "attestation must be user-asserted or escape-boundary-witnessed");
          }
        }
        break;
      }
      case Command::Grid: parse_grid(block(j, "grid"), cfg.grid); break;
    }
    return cfg;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

/// Configuration with every default filled in; re-parsing it reproduces the run.
inline Json config_to_json(const RunConfig& cfg) {
  using namespace run_detail;
  Json j;
  j["command"] = std::string(to_string(cfg.command));
  j["function"] = to_json(cfg.function);
  j["output_dir"] = cfg.output_dir;
  j["seed"] = cfg.seed;
  auto profile_json = [&] {
    return Json{{"r_min", cfg.profile.r_min},
                {"r_max", cfg.profile.r_max},
                {"points_per_decade", cfg.profile.points_per_decade},
                {"k_max", cfg.profile.k_max},
                {"k_min", cfg.profile.k_min},
                {"tail_fraction", cfg.profile.tail_fraction}};
  };
  auto certify_json = [&] {
    return Json{{"logR1", cfg.certify.logR1}, {"c_schedule", cfg.certify.c_schedule}, {"n_max", cfg.certify.n_max}};
  };
  switch (cfg.command) {
    case Command::Profile:
    case Command::Order: j[std::string(to_string(cfg.command))] = profile_json(); break;
    case Command::Report: {
      Json b = profile_json();
      b["epsilon"] = cfg.report.epsilon;
      b["R"] = cfg.report.R;
      if (cfg.report.condition_6_1) {
        b["condition_6_1"] = Json{{"r_grid", cfg.report.condition_6_1->r_grid}, {"C", cfg.report.condition_6_1->C}};
      }
      j["report"] = b;
      break;
    }
    case Command::Certify: j["certify"] = certify_json(); break;
    case Command::Curves: {
      Json b = certify_json();
      b["disc"] = disc_json(cfg.curves.disc);
      b["attestation"] = cfg.curves.attestation;
      j["curves"] = b;
      break;
    }
    case Command::Grid: {
      const auto& g = cfg.grid;
      Json b = to_json(g.spec);
      b["pixel_budget"] = g.pixel_budget;
      b["logR"] = g.logR ? Json(*g.logR) : Json(nullptr);
      b["L_max"] = g.L_max;
      b["disc"] = g.disc ? disc_json(*g.disc) : Json(nullptr);
      b["include_n0"] = g.include_n0;
      j["grid"] = b;
      break;
    }
  }
  return j;
}

struct RunResult {
  int exit_status = 0;
  std::string message;
  std::vector<std::string> outputs;  // file names inside output_dir
};

/// Runs one command and writes its outputs plus manifest.json into
/// output_dir. Exit status 0 on success, 3 on a computation error.
inline RunResult run(const RunConfig& cfg, WorkerPool* pool = nullptr,
                     const std::function<void(const std::string&)>& log = {}) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  const fs::path dir(cfg.output_dir);
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  auto emit = [&](const std::string& name, const std::string& content) {
    write_file((dir / name).string(), content);
    res.outputs.push_back(name);
    say("wrote " + (dir / name).string());
  };
  auto emit_json = [&](const std::string& name, const Json& j) { emit(name, j.dump(2) + "\n"); };

  fs::create_directories(dir);
  const FunctionSpec& f = cfg.function;
  try {
    switch (cfg.command) {
      case Command::Profile:
      case Command::Order:
      case Command::Report: {
        const auto& p = cfg.profile;
        say("building profile on [" + format_double(p.r_min) + ", " + format_double(p.r_max) + "]");
        const auto prof = build_profile(f, p.r_min, p.r_max, p.points_per_decade, {p.k_max, p.k_min, true}, pool);
        emit("profile.csv", profile_csv(prof));
        if (cfg.command == Command::Order) {
          Json j = to_json(estimate_order(prof, p.tail_fraction));
          j["tail_fraction"] = p.tail_fraction;
          j["r_min"] = p.r_min;
          j["r_max"] = p.r_max;
          emit_json("order.json", j);
        } else if (cfg.command == Command::Report) {
          Json j = to_json(growth_report(prof, p.tail_fraction, cfg.report.epsilon, cfg.report.R));
          if (cfg.report.condition_6_1) {
            j["condition_6_1"] =
                to_json(check_condition_6_1(f, cfg.report.condition_6_1->r_grid, cfg.report.condition_6_1->C));
          }
          emit_json("growth_report.json", j);
        }
        break;
      }
      case Command::Certify:
      case Command::Curves: {
        const auto& c = cfg.certify;
        const auto cert = build_baker_sequences(f, c.logR1, c.c_schedule, c.n_max, {}, pool);
        emit_json("certificate.json", to_json(cert));
        if (cfg.command == Command::Curves) {
          const auto fam = verify_theorem4_curves(f, cfg.curves.disc, cert, cfg.curves.attestation);
          emit_json("curves.json", to_json(fam, cert));
        }
        break;
      }
      case Command::Grid: {
        const auto& g = cfg.grid;
        auto grid = classify_grid(f, g.spec, pool, g.pixel_budget);
        if (g.logR) classify_fast(f, grid, *g.logR, g.L_max);
        if (g.disc) classify_bd(f, grid, *g.disc, g.include_n0);
        emit("classes.ppm", class_ppm(grid));
        if (g.logR) emit("fast_mask.ppm", mask_ppm(grid.fast_mask, g.spec.nx, g.spec.ny));
        if (g.disc) emit("bd_mask.ppm", mask_ppm(grid.bd_mask, g.spec.nx, g.spec.ny));
        emit("julia_boundary.ppm", mask_ppm(julia_boundary(grid), g.spec.nx, g.spec.ny));
        emit_json("connectivity.json", to_json(connectivity(grid)));
        emit_json("grid_summary.json", grid_summary(grid, f, g.logR.has_value(), g.disc.has_value()));
        break;
      }
    }
    res.exit_status = 0;
  } catch (const std::exception& e) {
    res.exit_status = 3;
    res.message = e.what();
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Json manifest{{"version", kVersion},
                {"config", config_to_json(cfg)},
                {"outputs", res.outputs},
                {"exit_status", res.exit_status},
                {"error", res.message.empty() ? Json(nullptr) : Json(res.message)},
                {"wall_time_seconds", wall}};
  write_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
  return res;
}

}  // namespace escape_lab
