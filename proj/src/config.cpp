#include "growthopt/config.hpp"

#include <filesystem>

namespace growthopt {

using nlohmann::json;

namespace {

std::string resolve(const std::string& base_dir, const std::string& p) {
  const std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return p;
  return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

}  // namespace

void validate_config(const RunConfig& cfg) {
  if (cfg.model_path.empty() && !cfg.model_inline) throw DomainError("config: no model given");
  if (cfg.grid.simplex_order < 1) throw DomainError("config: grid.simplex_order must be >= 1");
  if (!(cfg.grid.x_min > 0.0) || !(cfg.grid.x_min < cfg.grid.x_max))
    throw DomainError("config: need 0 < grid.wealth.x_min < grid.wealth.x_max");
  if (cfg.grid.n_x < 2) throw DomainError("config: grid.wealth.n_x must be >= 2");
  if (cfg.betas.empty()) throw DomainError("config: betas must not be empty");
  for (std::size_t k = 0; k < cfg.betas.size(); ++k) {
    if (!(cfg.betas[k] > 0.0 && cfg.betas[k] < 1.0)) throw DomainError("config: betas must lie in (0, 1)");
    if (k > 0 && !(cfg.betas[k] > cfg.betas[k - 1])) throw DomainError("config: betas must be increasing");
  }
  if (!(cfg.solver.tol > 0.0) || !(cfg.solver.tie_eps > 0.0) || !(cfg.cross_tol > 0.0) ||
      !(cfg.grid_tol > 0.0))
    throw DomainError("config: all tolerances must be positive");
  if (cfg.simulation.T < 1 || cfg.simulation.n_paths < 1)
    throw DomainError("config: simulation.T and simulation.n_paths must be >= 1");
  if (!(cfg.simulation.x0 > 0.0)) throw DomainError("config: simulation.x0 must be positive");
  if (cfg.ld.n_paths < 1 || cfg.ld.T_grid.empty()) throw DomainError("config: ld needs n_paths >= 1 and a T grid");
  if (cfg.ld.eps < 0.0) throw DomainError("config: ld.eps must be >= 0");
}

RunConfig parse_config(const json& j, const std::string& base_dir) {
  if (!j.is_object() || j.empty()) throw DomainError("config: expected a non-empty JSON object");
  RunConfig c;
  const json& model = j.at("model");
  if (model.is_string())
    c.model_path = resolve(base_dir, model.get<std::string>());
  else
    c.model_inline = model;
  if (j.contains("costs")) c.costs = j.at("costs");

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    c.grid.simplex_order = g.value("simplex_order", c.grid.simplex_order);
    if (g.contains("wealth")) {
      const json& w = g.at("wealth");
      c.grid.x_min = w.value("x_min", c.grid.x_min);
      c.grid.x_max = w.value("x_max", c.grid.x_max);
      c.grid.n_x = w.value("n_x", c.grid.n_x);
    }
    if (g.contains("interpolation"))
      c.grid.interpolation = interpolation_from_string(g.at("interpolation").get<std::string>());
  }
  if (j.contains("betas")) c.betas = j.at("betas").get<std::vector<double>>();
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    c.solver.tol = t.value("tol", c.solver.tol);
    c.solver.tie_eps = t.value("tie_eps", c.solver.tie_eps);
    c.solver.max_iterations = t.value("max_iterations", c.solver.max_iterations);
    c.cross_tol = t.value("cross_tol", c.cross_tol);
    c.grid_tol = t.value("grid_tol", c.grid_tol);
  }
  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    c.simulation.T = s.value("T", c.simulation.T);
    c.simulation.n_paths = s.value("n_paths", c.simulation.n_paths);
    c.simulation.seed = s.value("seed", c.simulation.seed);
    c.simulation.x0 = s.value("x0", c.simulation.x0);
    c.simulation.z0 = s.value("z0", c.simulation.z0);
    if (s.contains("pi0")) c.simulation.pi0 = s.at("pi0").get<std::vector<double>>();
  }
  if (j.contains("ld")) {
    const json& l = j.at("ld");
    if (l.contains("T_grid")) c.ld.T_grid = l.at("T_grid").get<std::vector<long>>();
    c.ld.eps = l.value("eps", c.ld.eps);
    c.ld.n_paths = l.value("n_paths", c.ld.n_paths);
    c.ld.seed = l.value("seed", c.ld.seed);
  }
  if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
  validate_config(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& ex) {
    throw DomainError("config file " + path + ": " + ex.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path().string());
}

json config_to_json(const RunConfig& c) {
  json j;
  if (c.model_inline)
    j["model"] = *c.model_inline;
  else
    j["model"] = c.model_path;
  if (c.costs) j["costs"] = *c.costs;
  j["grid"] = json{{"simplex_order", c.grid.simplex_order},
                   {"wealth", {{"x_min", c.grid.x_min}, {"x_max", c.grid.x_max}, {"n_x", c.grid.n_x}}},
                   {"interpolation", to_string(c.grid.interpolation)}};
  j["betas"] = c.betas;
  j["tolerances"] = json{{"tol", c.solver.tol},
                         {"tie_eps", c.solver.tie_eps},
                         {"max_iterations", c.solver.max_iterations},
                         {"cross_tol", c.cross_tol},
                         {"grid_tol", c.grid_tol}};
  j["simulation"] = json{{"T", c.simulation.T},
                         {"n_paths", c.simulation.n_paths},
                         {"seed", c.simulation.seed},
                         {"x0", c.simulation.x0},
                         {"z0", c.simulation.z0},
                         {"pi0", c.simulation.pi0}};
  j["ld"] = json{{"T_grid", c.ld.T_grid}, {"eps", c.ld.eps}, {"n_paths", c.ld.n_paths}, {"seed", c.ld.seed}};
  j["output_dir"] = c.output_dir;
  return j;
}

ModelBundle load_bundle(const RunConfig& cfg) {
  ModelBundle b = cfg.model_inline ? parse_model(*cfg.model_inline) : load_model(cfg.model_path);
  if (cfg.costs) b.costs = parse_costs(*cfg.costs, b.model.n_assets());
  return b;
}

}  // namespace growthopt
