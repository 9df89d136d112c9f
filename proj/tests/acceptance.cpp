// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include "connectivity_oracle.hpp"
#include "escape_lab/escape_lab.hpp"
#include "escape_lab/run.hpp"
#include "oracle_values.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace escape_lab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome order_recovery() {
  struct Case {
    const char* name;
    FunctionSpec f;
    double lo, hi, rho;
  };
  Outcome out{true, ""};
  for (const auto& c : {Case{"ScaledExp", FunctionSpec::scaled_exp(1.0), 10.0, 1e4, 1.0},
                        Case{"QuarterCosh", FunctionSpec::quarter_cosh(), 1e2, 1e8, 0.25},
                        Case{"Product(1/4)", FunctionSpec::canonical_product(0.25), 1e2, 1e8, 0.25},
                        Case{"Product(0.3)", FunctionSpec::canonical_product(0.3), 1e2, 1e8, 0.3}}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto o = estimate_order(build_profile(c.f, c.lo, c.hi, 4), 0.5);
    const double t = seconds_since(t0);
    const bool ok = std::abs(o.rho - c.rho) <= 0.02 && t < 10.0;
    out.pass = out.pass && ok;
    out.detail += std::string(c.name) + fmt(" rho=%.4f", o.rho) + fmt(" (%.2fs); ", t);
  }
  return out;
}

Outcome asymptotic_constant() {
  const double logM = max_modulus(FunctionSpec::canonical_product(0.25), 1e8).log_value;
  const double ratio = logM / std::pow(1e8, 0.25);
  const double target = kPi * std::sqrt(2.0);
  const double err = std::abs(ratio / target - 1.0);
  return {err < 0.05, fmt("log M(1e8)/1e8^(1/4) = %.5f", ratio) + fmt(" vs %.5f", target) + fmt(", rel err %.4f", err)};
}

Outcome condition_1_6() {
  const auto p = check_condition_1_6(build_profile(FunctionSpec::canonical_product(0.25), 1e2, 1e8, 4));
  const auto e = check_condition_1_6(build_profile(FunctionSpec::scaled_exp(1.0), 10.0, 1e4, 4));
  const double target = std::pow(2.0, 0.25);
  const double paired = oracle::kLogProdQuarter_2e6 / oracle::kLogProdQuarter_1e6;
  const bool ok = std::abs(p.c_estimate / target - 1.0) < 0.01 && std::abs(p.c_estimate / paired - 1.0) < 0.01 &&
                  p.holds && std::abs(e.c_estimate - 2.0) <= 0.01;
  return {ok, fmt("product c=%.6f", p.c_estimate) + fmt(" (2^(1/4)=%.6f", target) + fmt(", paired oracle %.6f)", paired) +
                  (p.holds ? " holds" : " does not hold") + fmt("; exp c=%.6f", e.c_estimate)};
}

Outcome condition_1_5() {
  const double R = std::exp(std::exp(1.0));
  const bool exp_holds =
      check_condition_1_5(build_profile(FunctionSpec::scaled_exp(1.0), 10.0, 1e4, 4), 0.5, R).holds;
  const bool prod_holds =
      check_condition_1_5(build_profile(FunctionSpec::canonical_product(0.25), 1e2, 1e8, 4), 0.5, R).holds;
  RadialProfile synth;
  bool arithmetic = true;
  for (int i = 0; i < 64; ++i) {
    const double lr = std::log(1e45) + (std::log(1e120) - std::log(1e45)) * i / 63.0;
    ProfileEntry e;
    e.r = std::exp(lr);
    e.logM = std::exp(std::cbrt(lr));
    synth.entries.push_back(e);
    arithmetic = arithmetic && std::cbrt(lr) < std::sqrt(lr) / std::sqrt(std::log(lr));
  }
  const bool synth_holds = check_condition_1_5(synth, 0.5, R).holds;
  const bool ok = !exp_holds && !prod_holds && synth_holds && arithmetic;
  return {ok, std::string("ScaledExp holds=") + (exp_holds ? "true" : "false") +
                  ", product holds=" + (prod_holds ? "true" : "false") +
                  ", synthetic exp((log r)^(1/3)) on [1e45, 1e120] holds=" + (synth_holds ? "true" : "false")};
}

Outcome baker_certificates(BakerCertificate& product_cert) {
  const std::vector<double> c(5, 2.0);
  const double logR1 = std::log(1e3);
  std::string detail;
  bool ok = true;

  auto t0 = std::chrono::steady_clock::now();
  product_cert = build_baker_sequences(FunctionSpec::canonical_product(0.25), logR1, c, 3);
  double t = seconds_since(t0);
  const bool prod_ok = product_cert.verified && !product_cert.extrapolated_from && t < 30.0;
  ok = ok && prod_ok;
  detail += std::string("product ") + (prod_ok ? "verified" : "not verified") + fmt(" (%.2fs)", t);

  t0 = std::chrono::steady_clock::now();
  try {
    const auto q = build_baker_sequences(FunctionSpec::quarter_cosh(), logR1, c, 3);
    t = seconds_since(t0);
    const bool q_ok = q.verified && !q.extrapolated_from && t < 30.0;
    ok = ok && q_ok;
    detail += std::string("; QuarterCosh ") + (q_ok ? "verified" : "not verified");
  } catch (const Error& e) {
    ok = false;
    detail += std::string("; QuarterCosh: ") + std::string(to_string(e.kind())) + " (" + e.what() + ")";
  }

  const auto ex = build_baker_sequences(FunctionSpec::scaled_exp(1.0), logR1, c, 3);
  const bool ex_ok = !ex.verified && ex.no_candidate && *ex.no_candidate == 1;
  ok = ok && ex_ok;
  detail += std::string("; ScaledExp ") + (ex_ok ? "NoCandidate(1)" : "unexpected result");
  return {ok, detail};
}

Outcome curves(const BakerCertificate& cert) {
  if (!cert.verified) return {false, "no verified product certificate"};
  const auto fam = verify_theorem4_curves(FunctionSpec::canonical_product(0.25), Disc{{-1.5, 0.0}, 0.1}, cert);
  std::string detail;
  for (const auto& k : fam.checks) {
    detail += "n=" + std::to_string(k.n) + (k.surrounds_image && k.image_surrounds_next ? " ok; " : " failed; ");
  }
  return {fam.all_pass() && fam.checks.size() == 3, detail};
}

Outcome condition_6_1() {
  const auto c = check_condition_6_1(FunctionSpec::canonical_product(0.25), {1e3, 1e4, 1e5, 1e6}, 1.5);
  const double oracle_ratio =
      oracle::kLogDerivQuarter_1e6 / (1.5 * oracle::kLogProdQuarter_1e6 / std::log(1e6));
  const bool agree = std::abs(c.ratios.back() - oracle_ratio) < 1e-6;
  return {c.holds_on_grid && c.min_ratio > 1.0 && agree,
          fmt("min_ratio=%.5f", c.min_ratio) + fmt(", ratio at 1e6 %.8f", c.ratios.back()) +
              fmt(" vs oracle %.8f", oracle_ratio)};
}

Outcome containment_probe() {
  const auto f = FunctionSpec::quarter_cosh();
  const double M50 = std::exp(max_modulus(f, 50.0).log_value);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  std::vector<Complex> targets;
  for (int j = 0; j < 16; ++j) targets.push_back(std::polar(2.0 * M50 * std::sqrt((j + 0.5) / 16.0), j * golden));
  const auto w = check_winding(f, std::log(100.0), targets);
  std::size_t covered = 0, agree = 0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    covered += w[j] >= 1;
    agree += w[j] == oracle::kProbeWindings[j];
  }
  return {covered == 16, std::to_string(covered) + "/16 targets with winding >= 1 (dense oracle agrees on " +
                             std::to_string(agree) + "/16)"};
}

Outcome masks_and_connectivity() {
  std::size_t violations = 0, grids = 0;
  auto check_grid = [&](const FunctionSpec& f, const GridSpec& s, double logR, const Disc& D) {
    auto g = classify_grid(f, s);
    classify_fast(f, g, logR, 2);
    classify_bd(f, g, D);
    const auto inc = check_mask_inclusion(g);
    violations += inc.bd_not_fast + inc.fast_not_escaping;
    ++grids;
  };
  GridSpec a;
  a.center = {1.0, 0.0};
  a.width = a.height = 6.0;
  a.nx = a.ny = 128;
  check_grid(FunctionSpec::scaled_exp(0.2), a, std::log(3.0), Disc{{0.0, 0.0}, 0.5});
  GridSpec b;
  b.width = b.height = 8.0;
  b.nx = b.ny = 32;
  b.max_iter = 40;
  check_grid(FunctionSpec::canonical_product(0.25), b, std::log(2.0), Disc{{-1.5, 0.0}, 0.1});

  std::mt19937_64 rng(7);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::bernoulli_distribution coin(0.3 + 0.4 * (trial % 5) / 4.0);
    std::vector<std::uint8_t> m(64 * 64);
    for (auto& v : m) v = coin(rng) ? 1 : 0;
    const auto rep = connectivity(m, 64, 64);
    const auto bf = oracle::brute_force(m, 64, 64);
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, std::size_t>> boxes;
    for (const auto& bb : rep.hole_bounding_boxes) boxes.emplace_back(bb.x0, bb.y0, bb.x1, bb.y1, bb.pixels);
    std::sort(boxes.begin(), boxes.end());
    const bool same = rep.escaping_pixels == bf.pixels && rep.escaping_components == bf.components &&
                      rep.hole_components == bf.holes && boxes == bf.boxes;
    mismatches += same ? 0 : 1;
  }
  return {violations == 0 && mismatches == 0,
          std::to_string(violations) + " inclusion violations on " + std::to_string(grids) + " grids, " +
              std::to_string(mismatches) + "/100 random masks differ from flood fill"};
}

Outcome zeros_and_min_shortcut() {
  const auto q = FunctionSpec::quarter_cosh();
  double worst = 0.0;
  for (int n = 1; n <= 5; ++n) {
    const double h = n - 0.5;
    const double r = 4.0 * std::pow(kPi, 4) * h * h * h * h;
    const double y = std::pow(r, 0.25) / std::sqrt(2.0);
    worst = std::max(worst, std::exp(evaluate(q, -r).log_abs - std::log(std::cosh(y))));
  }
  const auto f = FunctionSpec::canonical_product(0.25);
  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> u(std::log(2.0), std::log(1e6));
  double worst_min = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double r = std::exp(u(rng));
    const auto v = min_modulus(f, r);
    double dense = kInf;
    for (int j = 0; j < 4096; ++j) dense = std::min(dense, evaluate(f, std::polar(r, 2.0 * kPi * j / 4096.0)).log_abs);
    worst_min = std::max(worst_min, std::abs(v.log_value - dense));
  }
  return {worst < 1e-12 && worst_min <= 1e-6,
          fmt("max |f(zero)|/cosh = %.2e", worst) + fmt(", max shortcut vs dense gap %.2e", worst_min)};
}

Outcome determinism() {
  const auto base = fs::temp_directory_path() / "escape_lab_acceptance";
  fs::remove_all(base);
  auto cfg = parse_config(Json::parse(R"({
      "command": "grid", "function": {"kind": "ScaledExp", "lambda": 0.2},
      "grid": {"center": [1.0, 0.0], "width": 6.0, "height": 6.0, "nx": 128, "ny": 128, "max_iter": 100,
               "logR": 1.0986122886681098, "L_max": 2, "disc": {"center": [0.0, 0.0], "radius": 0.5}}})"));
  std::vector<std::vector<std::string>> contents;
  std::vector<std::string> names;
  for (std::size_t threads : {1, 8, 1, 8}) {
    WorkerPool pool(threads);
    cfg.output_dir = (base / ("run" + std::to_string(contents.size()))).string();
    const auto res = run(cfg, &pool);
    if (res.exit_status != 0) return {false, "run failed: " + res.message};
    names = res.outputs;
    std::vector<std::string> files;
    for (const auto& n : res.outputs) files.push_back(read_file((fs::path(cfg.output_dir) / n).string()));
    contents.push_back(files);
  }
  bool same = true;
  for (const auto& c : contents) same = same && c == contents.front();
  return {same, std::to_string(names.size()) + " outputs compared over 4 runs (threads 1, 8, 1, 8)"};
}

}  // namespace

int main() {
  BakerCertificate product_cert;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"order recovery", order_recovery},
      {"asymptotic constant of log M", asymptotic_constant},
      {"doubling ratio condition", condition_1_6},
      {"slow growth condition", condition_1_5},
      {"Baker certificates", [&] { return baker_certificates(product_cert); }},
      {"surrounding curves", [&] { return curves(product_cert); }},
      {"logarithmic derivative condition", condition_6_1},
      {"containment probe", containment_probe},
      {"mask inclusion and connectivity oracle", masks_and_connectivity},
      {"zero witnesses and min-modulus shortcut", zeros_and_min_shortcut},
      {"determinism across thread counts", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %zu: %s - %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
