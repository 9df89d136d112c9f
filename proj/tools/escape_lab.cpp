// escape_lab: command-line front end.
//
//   escape_lab --config run.json [--out DIR] [--threads N] [--verbose]
//
// Exit status: 0 success, 2 invalid configuration, 3 computation error.

#include "escape_lab/run.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <thread>

int main(int argc, char** argv) {
  CLI::App app{"Growth, escaping-set and connectivity experiments for entire functions"};
  std::string config_path;
  std::string out_dir;
  std::size_t threads = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "Run configuration or manifest JSON")->required();
  app.add_option("--out", out_dir, "Output directory (overrides output_dir in the config)");
  app.add_option("--threads", threads, "Worker threads (default: ESCAPE_LAB_THREADS, else hardware)");
  app.add_flag("--verbose", verbose, "Progress messages on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (threads == 0) {
    if (const char* env = std::getenv("ESCAPE_LAB_THREADS")) {
      try {
        threads = static_cast<std::size_t>(std::stoul(env));
      } catch (const std::exception&) {
        std::cerr << "error: ESCAPE_LAB_THREADS must be a positive integer\n";
        return 2;
      }
    }
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  escape_lab::RunConfig cfg;
  try {
    const auto text = escape_lab::read_file(config_path);
    cfg = escape_lab::parse_config(escape_lab::Json::parse(text));
  } catch (const escape_lab::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;

  escape_lab::WorkerPool pool(threads);
  auto log = [&](const std::string& s) {
    if (verbose) std::cerr << "[escape_lab] " << s << "\n";
  };
  log("command " + std::string(escape_lab::to_string(cfg.command)) + " with " + std::to_string(threads) + " threads");
  try {
    const auto res = escape_lab::run(cfg, &pool, log);
    if (res.exit_status != 0) std::cerr << "computation error: " << res.message << "\n";
    return res.exit_status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
