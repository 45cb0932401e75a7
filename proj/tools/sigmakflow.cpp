// sigmakflow <subcommand> --config <path> [--threads N] [--out DIR]
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sigmakflow/sigmakflow.hpp"

int main(int argc, char** argv) {
  CLI::App app{"sigma_k curvature flow experiments"};
  app.require_subcommand(1, 1);
  std::string configPath, outDir;
  int threads = 0;
  for (const auto& name : sigmak::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", configPath, "experiment config file")->required();
    sub->add_option("--threads", threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", outDir, "output directory (overrides config and OUTPUT_DIR)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  sigmak::ExperimentConfig cfg;
  try {
    cfg = sigmak::load_config(sub, configPath);
  } catch (const sigmak::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  if (!outDir.empty()) cfg.outDir = outDir;
  cfg.threads = threads;
  const auto res = sigmak::run_experiment(cfg);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  if (!res.message.empty()) std::cerr << (res.exitCode == 2 ? "config error: " : "error: ") << res.message << '\n';
  for (const auto& s : res.series) std::printf("%-24s %s\n", s.name.c_str(), s.pass ? "pass" : "FAIL");
  std::printf("summary: %s/summary.json (exit %d, %.2f s)\n", cfg.outDir.c_str(), res.exitCode, res.wallSeconds);
  return res.exitCode;
}
