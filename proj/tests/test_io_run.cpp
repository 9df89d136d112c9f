#include "escape_lab/run.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

using namespace escape_lab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("escape_lab_test_" + name);
  fs::remove_all(p);
  return p;
}

Json with_output(Json j, const std::string& out) {
  j["output_dir"] = out;
  return j;
}

Json grid_config(const std::string& out) {
  return with_output(Json::parse(R"({
    "command": "grid",
    "function": {"kind": "ScaledExp", "lambda": 0.2},
    "grid": {"center": [1.0, 0.0], "width": 6.0, "height": 6.0, "nx": 48, "ny": 40, "max_iter": 60,
             "logR": 1.0986122886681098, "L_max": 2, "disc": {"center": [0.0, 0.0], "radius": 0.5}}
  })"),
                     out);
}

}  // namespace

TEST(Io, FunctionSpecRoundTrip) {
  ZeroRadiiRule rule;
  rule.prefix = {0.5, 3.0};
  rule.exponent = 3.0;
  rule.scale = 1.0;
  auto gp = FunctionSpec::general_product(2.0, rule);
  gp.tail_policy = TailPolicy::PlainTruncation;
  for (const auto& f : {FunctionSpec::fatou_baker(), FunctionSpec::scaled_exp(0.2), FunctionSpec::quarter_cosh(),
                        FunctionSpec::canonical_product(0.3, 1.7), gp}) {
    const auto g = function_spec_from_json(Json::parse(to_json(f).dump()));
    EXPECT_EQ(fingerprint(g), fingerprint(f));
  }
}

TEST(Io, FunctionSpecErrors) {
  EXPECT_THROW(function_spec_from_json(Json::parse(R"({"kind": "Sine"})")), Error);
  EXPECT_THROW(function_spec_from_json(Json::parse(R"({"lambda": 1})")), Error);
  EXPECT_THROW(function_spec_from_json(Json::parse(R"({"kind": "CanonicalProduct"})")), Error);
  EXPECT_THROW(function_spec_from_json(Json::parse(R"({"kind": "CanonicalProduct", "rho": 0.7})")), Error);
  EXPECT_THROW(function_spec_from_json(Json::parse(R"({"kind": "ScaledExp", "lambda": "big"})")), Error);
  EXPECT_THROW(
      function_spec_from_json(Json::parse(R"({"kind": "CanonicalProduct", "rho": 0.25, "tail_policy": "fast"})")),
      Error);
}

TEST(Io, DoublesRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, 1.4158569360497306782e+41, 5e-324, 17.854535018758006}) {
    EXPECT_EQ(Json::parse(Json(v).dump()).get<double>(), v);
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
}

TEST(Io, ProfileCsvRoundTrip) {
  const auto p = build_profile(FunctionSpec::canonical_product(0.25), 1e2, 1e5, 4);
  const auto text = profile_csv(p);
  const auto q = parse_profile_csv(text);
  ASSERT_EQ(q.entries.size(), p.entries.size());
  for (std::size_t i = 0; i < p.entries.size(); ++i) {
    EXPECT_EQ(q.entries[i].r, p.entries[i].r);
    EXPECT_EQ(q.entries[i].logM, p.entries[i].logM);
    EXPECT_EQ(q.entries[i].logm, p.entries[i].logm);
    EXPECT_EQ(q.entries[i].method, p.entries[i].method);
  }
  EXPECT_EQ(profile_csv(q), text);
  EXPECT_THROW(parse_profile_csv("radius,M\n"), Error);
  EXPECT_THROW(parse_profile_csv("r,logM,logm,method\n1,2,3,Guess\n"), Error);
}

TEST(Io, CertificateJson) {
  const auto cert = build_baker_sequences(FunctionSpec::scaled_exp(1.0), std::log(10.0), {2, 2, 2, 2}, 3);
  const auto j = to_json(cert);
  EXPECT_EQ(j["log_base"], "e");
  EXPECT_EQ(j["verified"], false);
  EXPECT_EQ(j["no_candidate"], 1);
  EXPECT_TRUE(j["extrapolated_from"].is_null());
  EXPECT_EQ(j["claim"], "not certified");
}

TEST(Io, PpmHeaderAndSize) {
  const std::vector<std::uint8_t> m = {1, 0, 0, 1, 1, 0};
  const auto s = mask_ppm(m, 3, 2);
  const std::string header = "P6\n3 2\n255\n";
  ASSERT_EQ(s.size(), header.size() + 18);
  EXPECT_EQ(s.substr(0, header.size()), header);
  EXPECT_EQ(static_cast<unsigned char>(s[header.size()]), 255);
  EXPECT_EQ(static_cast<unsigned char>(s[header.size() + 3]), 0);
}

TEST(Config, DefaultsAndValidation) {
  const auto cfg = parse_config(Json::parse(R"({"command": "certify", "function": {"kind": "CanonicalProduct", "rho": 0.25}})"));
  EXPECT_EQ(cfg.command, Command::Certify);
  EXPECT_EQ(cfg.certify.n_max, 3u);
  EXPECT_EQ(cfg.certify.c_schedule, std::vector<double>(4, 2.0));
  EXPECT_DOUBLE_EQ(cfg.certify.logR1, std::log(1e3));

  const auto r1 = parse_config(Json::parse(
      R"({"command": "certify", "function": {"kind": "QuarterCosh"}, "certify": {"R1": 1e5, "c_schedule": [2, 3, 2, 2]}})"));
  EXPECT_DOUBLE_EQ(r1.certify.logR1, std::log(1e5));
  EXPECT_EQ(r1.certify.c_schedule[1], 3.0);

  for (const char* bad : {
           R"({"function": {"kind": "QuarterCosh"}})",
           R"({"command": "fly", "function": {"kind": "QuarterCosh"}})",
           R"({"command": "profile"})",
           R"({"command": "profile", "function": {"kind": "QuarterCosh"}, "profile": {"points_per_decade": 2}})",
           R"({"command": "profile", "function": {"kind": "QuarterCosh"}, "profile": {"r_min": 10, "r_max": 1}})",
           R"({"command": "grid", "function": {"kind": "ScaledExp"}, "grid": {"nx": 5000, "ny": 5000}})",
           R"({"command": "grid", "function": {"kind": "ScaledExp"}, "grid": {"bailout": 2}})",
           R"({"command": "certify", "function": {"kind": "ScaledExp"}, "certify": {"c_schedule": [2, 2]}})",
           R"({"command": "certify", "function": {"kind": "ScaledExp"}, "certify": {"c_schedule": 1.0}})",
           R"({"command": "curves", "function": {"kind": "ScaledExp"}, "curves": {"attestation": "trust me"}})",
           R"({"command": "report", "function": {"kind": "ScaledExp"}, "report": {"condition_6_1": {"C": 2}}})",
           R"({"command": "report", "function": {"kind": "ScaledExp"}, "report": {"epsilon": 1.5}})",
       }) {
    EXPECT_THROW(parse_config(Json::parse(bad)), ConfigError) << bad;
  }
}

TEST(Config, EchoReparsesToSameConfig) {
  for (const char* text : {
           R"({"command": "report", "function": {"kind": "CanonicalProduct", "rho": 0.25},
               "report": {"r_min": 100, "r_max": 1e6, "condition_6_1": {"r_grid": [1e3, 1e4], "C": 1.5}}})",
           R"({"command": "curves", "function": {"kind": "CanonicalProduct", "rho": 0.25},
               "curves": {"disc": {"center": [-1.5, 0], "radius": 0.1}}})",
           R"({"command": "order", "function": {"kind": "QuarterCosh"}})",
       }) {
    const auto a = config_to_json(parse_config(Json::parse(text)));
    const auto b = config_to_json(parse_config(a));
    EXPECT_EQ(a.dump(), b.dump());
  }
  const auto g = config_to_json(parse_config(grid_config("x")));
  EXPECT_EQ(config_to_json(parse_config(g)).dump(), g.dump());
}

TEST(Run, GridWritesOutputsAndManifest) {
  const auto dir = fresh_dir("grid");
  const auto cfg = parse_config(grid_config(dir.string()));
  const auto res = run(cfg);
  ASSERT_EQ(res.exit_status, 0) << res.message;
  for (const char* name : {"classes.ppm", "fast_mask.ppm", "bd_mask.ppm", "julia_boundary.ppm", "connectivity.json",
                           "grid_summary.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  const auto summary = Json::parse(read_file((dir / "grid_summary.json").string()));
  EXPECT_EQ(summary["mask_inclusion"]["bd_not_fast"], 0);
  EXPECT_EQ(summary["mask_inclusion"]["fast_not_escaping"], 0);
  const auto manifest = Json::parse(read_file((dir / "manifest.json").string()));
  EXPECT_EQ(manifest["version"], kVersion);
  EXPECT_EQ(manifest["exit_status"], 0);
  EXPECT_TRUE(manifest["error"].is_null());
}

TEST(Run, ManifestReproducesOutputs) {
  const auto dir_a = fresh_dir("manifest_a");
  const auto dir_b = fresh_dir("manifest_b");
  const auto first = run(parse_config(grid_config(dir_a.string())));
  ASSERT_EQ(first.exit_status, 0);
  auto cfg = parse_config(Json::parse(read_file((dir_a / "manifest.json").string())));
  cfg.output_dir = dir_b.string();
  WorkerPool pool(8);
  const auto second = run(cfg, &pool);
  ASSERT_EQ(second.exit_status, 0);
  ASSERT_EQ(first.outputs, second.outputs);
  for (const auto& name : first.outputs) {
    EXPECT_EQ(read_file((dir_a / name).string()), read_file((dir_b / name).string())) << name;
  }
}

TEST(Run, ReportAndCurves) {
  const auto dir = fresh_dir("report");
  const auto cfg = parse_config(with_output(Json::parse(R"({
      "command": "report", "function": {"kind": "CanonicalProduct", "rho": 0.25},
      "report": {"r_min": 100, "r_max": 1e8, "condition_6_1": {"r_grid": [1e3, 1e4, 1e5, 1e6], "C": 1.5}}})"), dir.string()));
  const auto res = run(cfg);
  ASSERT_EQ(res.exit_status, 0) << res.message;
  const auto rep = Json::parse(read_file((dir / "growth_report.json").string()));
  EXPECT_NEAR(rep["order_estimate"].get<double>(), 0.25, 0.02);
  EXPECT_EQ(rep["cond_1_5"]["holds"], false);
  EXPECT_EQ(rep["cond_1_6"]["holds"], true);
  EXPECT_EQ(rep["condition_6_1"]["holds_on_grid"], true);

  const auto cdir = fresh_dir("curves");
  const auto ccfg = parse_config(with_output(Json::parse(R"({"command": "curves", "function": {"kind": "CanonicalProduct", "rho": 0.25}})"), cdir.string()));
  const auto cres = run(ccfg);
  ASSERT_EQ(cres.exit_status, 0) << cres.message;
  const auto curves = Json::parse(read_file((cdir / "curves.json").string()));
  EXPECT_TRUE(curves["failure"].is_null());
  EXPECT_EQ(curves["julia_attestation"], "user-asserted");
}

TEST(Run, ComputationErrorGivesStatusThree) {
  const auto dir = fresh_dir("error");
  const auto cfg = parse_config(with_output(Json::parse(R"({"command": "certify", "function": {"kind": "QuarterCosh"}})"), dir.string()));
  const auto res = run(cfg);
  EXPECT_EQ(res.exit_status, 3);
  const auto manifest = Json::parse(read_file((dir / "manifest.json").string()));
  EXPECT_EQ(manifest["exit_status"], 3);
  EXPECT_FALSE(manifest["error"].is_null());
}
