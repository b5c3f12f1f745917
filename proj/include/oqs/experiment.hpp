// Batch experiments driven by JSON configs: schema validation, dispatch to
// the solvers, and reproducible CSV / JSON / manifest output.
//
// Config layout:
//   {"experiment": "semigroup" | "bipartite" | "semimarkov" | "measure" | "divisibility",
//    "model": {...}, "grid": {"t_max", "n_steps"}, "initial_state": ...,
//    "solver": {...}, "seed": N, "tolerances": {...}, "output": {"dir", "prefix"}}
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace oqs {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitInvariant = 4,
};

struct RunOptions {
  /// overrides output.dir when set
  std::optional<std::string> out_dir;
  /// overrides the config seed when set
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool validate_only = false;
};

struct RunResult {
  int exit_code = kExitOk;
  std::vector<std::string> diagnostics;
  /// paths of the files written
  std::vector<std::string> outputs;
};

/// Every schema and model violation in the config; empty when valid.
std::vector<std::string> validate_config(const std::string& config_text);

RunResult run_experiment(const std::string& config_text, const RunOptions& opt);

/// Reads the file then runs; an unreadable file is a config error.
RunResult run_config_file(const std::string& path, const RunOptions& opt);
std::vector<std::string> validate_config_file(const std::string& path);

/// 64-bit FNV-1a of the bytes.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace oqs
