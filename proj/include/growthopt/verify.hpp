#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "growthopt/config.hpp"
#include "growthopt/model_io.hpp"

namespace growthopt {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  long samples = 10000;          // random instances per cost-engine property
  int contraction_pairs = 100;
  long sim_paths = 50;
  long sim_T = 500;
  std::uint64_t seed = 1;
};

/// Runs the property suites of every module against one model and config
/// (cost identities and bounds, operator contraction and monotonicity,
/// vanishing-discount consistency, pathwise simulation checks).
std::vector<CheckResult> verify_all(const ModelBundle& bundle, const RunConfig& cfg,
                                    const VerifyOptions& options = {});

}  // namespace growthopt
