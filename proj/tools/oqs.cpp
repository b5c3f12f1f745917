// Command-line front end: oqs run <config.json> | oqs validate <config.json>
#include "oqs/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

int threads_from_env() {
  const char* env = std::getenv("OQS_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) return 1;
  return static_cast<int>(n);
}

void print(const std::vector<std::string>& lines) {
  for (const auto& l : lines) std::cerr << l << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-quantum-system dynamics and memory-effect experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", oqs::kVersion);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  bool validate_only = false;

  CLI::App* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config, "experiment config (JSON)")->required();
  auto* out_opt = run->add_option("--out", out_dir, "output directory (overrides output.dir)");
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed (overrides the config seed)");
  auto* threads_opt = run->add_option("--threads", threads, "worker threads (default: OQS_THREADS or 1)")
                          ->check(CLI::PositiveNumber);
  run->add_flag("--validate-only", validate_only, "check the config and exit");

  std::string vconfig;
  CLI::App* validate = app.add_subcommand("validate", "Report every problem in a config");
  validate->add_option("config", vconfig, "experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : oqs::kExitConfig;
  }

  if (*validate) {
    const auto diag = oqs::validate_config_file(vconfig);
    print(diag);
    if (diag.empty()) std::cout << "valid\n";
    return diag.empty() ? oqs::kExitOk : oqs::kExitConfig;
  }

  oqs::RunOptions opt;
  if (*out_opt) opt.out_dir = out_dir;
  if (*seed_opt) opt.seed = seed;
  opt.threads = *threads_opt ? threads : threads_from_env();
  opt.validate_only = validate_only;
  const oqs::RunResult res = oqs::run_config_file(config, opt);
  print(res.diagnostics);
  for (const auto& p : res.outputs) std::cout << p << "\n";
  if (validate_only && res.exit_code == oqs::kExitOk) std::cout << "valid\n";
  return res.exit_code;
}
