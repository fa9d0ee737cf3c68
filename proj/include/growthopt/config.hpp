#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "growthopt/dp_solver.hpp"
#include "growthopt/model_io.hpp"
#include "growthopt/simplex_grid.hpp"

namespace growthopt {

struct SimulationConfig {
  long T = 5000;
  long n_paths = 400;
  std::uint64_t seed = 20240521ULL;
  double x0 = 10.0;
  int z0 = 0;
  std::vector<double> pi0;  // empty: all wealth in the first asset
};

struct LdConfig {
  std::vector<long> T_grid{5, 10, 15, 20, 25, 30};
  double eps = 0.0;  // 0: use 0.25 (p_hat - min ln zeta_hat)
  long n_paths = 100000;
  std::uint64_t seed = 7ULL;
};

/// Batch configuration. Relative paths are resolved against the directory
/// of the config file.
struct RunConfig {
  std::string model_path;
  std::optional<nlohmann::json> model_inline;
  std::optional<nlohmann::json> costs;  // overrides the model file's costs
  GridSpec grid;
  std::vector<double> betas{0.9, 0.99, 0.995, 0.999};
  SolverOptions solver;
  double cross_tol = 5e-3;
  double grid_tol = 1e-2;
  SimulationConfig simulation;
  LdConfig ld;
  std::string output_dir = "out";
};

/// Throws DomainError on invalid values (non-positive tolerances, m < 1,
/// x_min >= x_max, ...).
RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);
void validate_config(const RunConfig& cfg);
nlohmann::json config_to_json(const RunConfig& cfg);

/// Model and costs named by the config.
ModelBundle load_bundle(const RunConfig& cfg);

}  // namespace growthopt
