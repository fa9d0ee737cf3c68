#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace growthopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Flag overrides applied on top of the config file.
struct CommandOptions {
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  // solve
  double beta = 0.0;
  std::string variant = "fixed_cost";
  // simulate
  std::string policy_path;
  std::string strategy = "grid";  // grid | mimicking
  std::optional<std::string> report_path;  // optimal.json used for the lambda comparison
  std::optional<long> T;
  std::optional<long> n_paths;
  // ldcheck
  std::optional<double> eps;
  // verify
  std::optional<long> samples;
};

struct CommandResult {
  int exit_code = kExitOk;
  nlohmann::json report;
  std::vector<std::string> outputs;  // files written, manifest last
};

/// Runs one subcommand: loads the config, writes every artifact plus
/// manifest_<command>.json into the output directory, and on failure writes
/// error_<command>.json. Never throws for domain, assumption or I/O errors;
/// those map to exit code 1 (2 for an empty or missing config).
CommandResult run_command(const std::string& command, const CommandOptions& options, std::ostream& log);

/// Sets the OpenMP thread count from GROWTHOPT_THREADS when present.
void apply_thread_env();

}  // namespace growthopt::cli
