#include "growthopt/value_io.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "growthopt/model_io.hpp"

namespace growthopt {

using nlohmann::json;

json grid_to_json(const StateGrid& grid) {
  json j;
  j["n_assets"] = grid.mesh.dim();
  j["simplex_order"] = grid.mesh.order();
  j["n_factors"] = grid.n_factors;
  j["interpolation"] = to_string(grid.interpolation);
  if (grid.wealth.trivial()) {
    j["wealth"] = nullptr;
  } else {
    j["wealth"] = json{{"x_min", grid.wealth.x_min()}, {"x_max", grid.wealth.x_max()}, {"n_x", grid.wealth.size()}};
  }
  return j;
}

StateGrid grid_from_json(const json& j) {
  GridSpec spec;
  spec.simplex_order = j.at("simplex_order").get<int>();
  spec.interpolation = interpolation_from_string(j.at("interpolation").get<std::string>());
  const bool with_wealth = j.contains("wealth") && !j.at("wealth").is_null();
  if (with_wealth) {
    spec.x_min = j.at("wealth").at("x_min").get<double>();
    spec.x_max = j.at("wealth").at("x_max").get<double>();
    spec.n_x = j.at("wealth").at("n_x").get<int>();
  }
  return StateGrid::build(spec, j.at("n_assets").get<int>(), j.at("n_factors").get<int>(), with_wealth);
}

std::string value_policy_csv(const ValueFunction& value, const Policy& policy) {
  const StateGrid& g = value.grid;
  if (policy.target.size() != g.size() || value.values.size() != g.size())
    throw DomainError("value/policy export: tables do not match the grid");
  const int d = g.mesh.dim();
  std::string out = "node,j,z";
  for (int i = 1; i <= d; ++i) out += ",pi_" + std::to_string(i);
  out += ",x,value,impulse,target_node";
  for (int i = 1; i <= d; ++i) out += ",target_" + std::to_string(i);
  out += '\n';
  for (int z = 0; z < g.n_factors; ++z)
    for (int j = 0; j < g.n_wealth(); ++j)
      for (int a = 0; a < g.n_nodes(); ++a) {
        const std::size_t s = g.index(a, j, z);
        out += std::to_string(a) + ',' + std::to_string(j) + ',' + std::to_string(z);
        for (double p : g.mesh.node(a)) out += ',' + format_double(p);
        out += ',';
        if (!g.wealth.trivial()) out += format_double(g.wealth.x(j));
        out += ',' + format_double(value.values[s]);
        out += ',' + std::to_string(static_cast<int>(policy.impulse[s]));
        out += ',' + std::to_string(policy.target[s]);
        for (double p : g.mesh.node(policy.target[s])) out += ',' + format_double(p);
        out += '\n';
      }
  return out;
}

json value_policy_header(const ValueFunction& value, const Policy& policy, std::uint64_t model_hash,
                         std::uint64_t seed) {
  json j;
  j["grid"] = grid_to_json(value.grid);
  j["beta"] = value.beta;
  j["variant"] = to_string(value.variant);
  j["policy_tag"] = policy.tag;
  j["model_hash"] = hash_hex(model_hash);
  j["seed"] = seed;
  j["interpolation"] = to_string(value.grid.interpolation);
  j["columns"] = "node,j,z,pi_1..pi_d,x,value,impulse,target_node,target_1..target_d";
  return j;
}

std::string write_value_policy(const std::string& stem, const ValueFunction& value, const Policy& policy,
                               std::uint64_t model_hash, std::uint64_t seed) {
  const std::string csv = stem + ".csv";
  write_atomic(csv, value_policy_csv(value, policy));
  write_atomic(stem + ".json", value_policy_header(value, policy, model_hash, seed).dump(2) + "\n");
  return csv;
}

LoadedPolicy read_policy(const std::string& csv_path) {
  const std::string header_path = std::filesystem::path(csv_path).replace_extension(".json").string();
  LoadedPolicy out;
  try {
    out.header = json::parse(read_file(header_path));
  } catch (const json::exception& ex) {
    throw DomainError("policy header " + header_path + ": " + ex.what());
  }
  Policy& p = out.policy;
  p.grid = grid_from_json(out.header.at("grid"));
  p.beta = out.header.value("beta", 0.0);
  p.tag = out.header.value("policy_tag", std::string("loaded"));
  p.impulse.assign(p.grid.size(), 0);
  p.target.assign(p.grid.size(), -1);

  std::istringstream in(read_file(csv_path));
  std::string line;
  std::getline(in, line);  // column names
  const int d = p.grid.mesh.dim();
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (static_cast<int>(f.size()) != 3 + d + 4 + d) throw DomainError("policy CSV: malformed row: " + line);
    const int a = std::stoi(f[0]);
    const int j = std::stoi(f[1]);
    const int z = std::stoi(f[2]);
    if (a < 0 || a >= p.grid.n_nodes() || j < 0 || j >= p.grid.n_wealth() || z < 0 || z >= p.grid.n_factors)
      throw DomainError("policy CSV: state index out of range: " + line);
    const std::size_t s = p.grid.index(a, j, z);
    p.impulse[s] = static_cast<std::uint8_t>(std::stoi(f[3 + d + 2]));
    const int t = std::stoi(f[3 + d + 3]);
    if (t < 0 || t >= p.grid.n_nodes()) throw DomainError("policy CSV: target node out of range: " + line);
    p.target[s] = t;
    ++rows;
  }
  if (rows != p.grid.size()) throw DomainError("policy CSV: expected one row per grid state");
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  const int d = traj.n_assets;
  std::string out = "t,z,xi";
  for (int i = 1; i <= d; ++i) out += ",pi_minus_" + std::to_string(i);
  out += ",transacted";
  for (int i = 1; i <= d; ++i) out += ",pi_" + std::to_string(i);
  out += ",e,x_minus,x\n";
  for (long t = 0; t < traj.steps; ++t) {
    out += std::to_string(t) + ',' + std::to_string(traj.z[t]) + ',' + std::to_string(traj.xi[t]);
    for (double p : traj.pi_minus_at(t)) out += ',' + format_double(p);
    out += ',' + std::to_string(static_cast<int>(traj.transacted[t]));
    for (double p : traj.pi_at(t)) out += ',' + format_double(p);
    out += ',' + format_double(traj.e[t]);
    out += ',' + format_double(std::exp(traj.log_x_minus[t]));
    out += ',' + format_double(std::exp(traj.log_x[t]));
    out += '\n';
  }
  return out;
}

std::string ld_csv(const LdReport& report) {
  std::string out = "T,p_hat,eps,tail_prob,n_paths,hits\n";
  for (const LdRow& r : report.rows) {
    out += std::to_string(r.T) + ',' + format_double(r.p_hat) + ',' + format_double(r.eps) + ',' +
           format_double(r.tail_prob) + ',' + std::to_string(r.n_paths) + ',' + std::to_string(r.hits) + '\n';
  }
  return out;
}

}  // namespace growthopt
