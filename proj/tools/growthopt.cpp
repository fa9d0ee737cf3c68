#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using growthopt::cli::CommandOptions;

int main(int argc, char** argv) {
  CLI::App app{"Growth-optimal portfolio selection under fixed and proportional transaction costs"};
  app.require_subcommand(1);

  CommandOptions opt;
  std::string out_dir;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config_path, "JSON run configuration")->required();
    sub->add_option("-o,--output-dir", out_dir, "Override the config's output_dir");
    sub->add_option("--seed", seed, "Override the config's seed");
  };

  CLI::App* validate = app.add_subcommand("validate", "Check market assumptions and cost constants");
  add_common(validate);

  CLI::App* solve = app.add_subcommand("solve", "Solve one discounted problem");
  add_common(solve);
  solve->add_option("--beta", opt.beta, "Discount factor in (0, 1)")->required();
  solve->add_option("--variant", opt.variant, "fixed_cost | proportional");

  CLI::App* optimal = app.add_subcommand("optimal", "Vanishing-discount growth rate and average policy");
  add_common(optimal);

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo growth of a stored policy");
  add_common(simulate);
  simulate->add_option("--policy", opt.policy_path, "Policy CSV written by solve or optimal")->required();
  simulate->add_option("--strategy", opt.strategy, "grid | mimicking");
  std::string report_path;
  simulate->add_option("--report", report_path, "optimal.json to compare the estimate against");
  long T = 0, n_paths = 0;
  simulate->add_option("--T", T, "Horizon");
  simulate->add_option("--paths", n_paths, "Number of paths");

  CLI::App* ldcheck = app.add_subcommand("ldcheck", "Empirical tail of the worst-asset log return");
  add_common(ldcheck);
  double eps = 0.0;
  ldcheck->add_option("--eps", eps, "Deviation below p_hat (0 or absent: automatic)");

  CLI::App* verify = app.add_subcommand("verify", "Run every property suite");
  add_common(verify);
  long samples = 0;
  verify->add_option("--samples", samples, "Random instances per cost property");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : growthopt::cli::kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--output-dir")) opt.output_dir = out_dir;
  if (sub->count("--seed")) opt.seed = seed;
  if (simulate->parsed()) {
    if (simulate->count("--report")) opt.report_path = report_path;
    if (simulate->count("--T")) opt.T = T;
    if (simulate->count("--paths")) opt.n_paths = n_paths;
  }
  if (ldcheck->parsed() && ldcheck->count("--eps")) opt.eps = eps;
  if (verify->parsed() && verify->count("--samples")) opt.samples = samples;

  growthopt::cli::apply_thread_env();
  const auto result = growthopt::cli::run_command(sub->get_name(), opt, std::cerr);
  if (!result.report.is_null())
    std::cout << result.report.dump(2) << "\n";
  return result.exit_code;
}
