#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "growthopt/dp_solver.hpp"
#include "growthopt/simulator.hpp"

namespace growthopt {

nlohmann::json grid_to_json(const StateGrid& grid);
StateGrid grid_from_json(const nlohmann::json& j);

/// One row per grid state:
/// node,j,z,pi_1..pi_d,x,value,impulse,target_node,target_1..target_d
std::string value_policy_csv(const ValueFunction& value, const Policy& policy);

/// Sidecar header describing a value/policy CSV.
nlohmann::json value_policy_header(const ValueFunction& value, const Policy& policy,
                                   std::uint64_t model_hash, std::uint64_t seed);

/// Writes <stem>.csv and <stem>.json atomically; returns the CSV path.
std::string write_value_policy(const std::string& stem, const ValueFunction& value, const Policy& policy,
                               std::uint64_t model_hash, std::uint64_t seed);

struct LoadedPolicy {
  Policy policy;
  nlohmann::json header;
};

/// Reads a policy written by write_value_policy (CSV path; the sidecar JSON
/// is found by replacing the extension).
LoadedPolicy read_policy(const std::string& csv_path);

/// t,z,xi,pi_minus_1..d,transacted,pi_1..d,e,x_minus,x
std::string trajectory_csv(const Trajectory& traj);

/// T,p_hat,eps,tail_prob,n_paths,hits
std::string ld_csv(const LdReport& report);

}  // namespace growthopt
