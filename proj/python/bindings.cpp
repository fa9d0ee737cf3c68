#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "commands.hpp"
#include "growthopt/average_optimizer.hpp"
#include "growthopt/model_io.hpp"
#include "growthopt/simulator.hpp"

namespace py = pybind11;
using namespace growthopt;

namespace {

py::dict constants_dict(const CostConstants& c) {
  py::dict d;
  d["eta"] = c.eta;
  d["eta_M"] = c.eta_M;
  d["M"] = c.M;
  d["M_star"] = c.M_star;
  d["x_star"] = c.x_star;
  d["c_hat"] = c.c_hat;
  return d;
}

py::dict report_dict(const VanishingDiscountReport& r) {
  py::dict d;
  d["betas"] = r.betas;
  d["m_beta"] = r.m_beta;
  d["lambda_estimates"] = r.lambda_estimates;
  d["sup_fixed"] = r.sup_fixed;
  d["lambda_fixed_estimates"] = r.lambda_fixed_estimates;
  d["span_prop"] = r.span_prop;
  d["lambda"] = r.lambda;
  d["lambda_extrapolated"] = r.lambda_extrapolated;
  d["lambda_fixed"] = r.lambda_fixed;
  d["lambda_fixed_extrapolated"] = r.lambda_fixed_extrapolated;
  d["last_difference"] = r.last_difference;
  d["policy_disagreement"] = r.policy_disagreement;
  d["converged"] = r.converged;
  d["diagnostics"] = r.diagnostics;
  return d;
}

py::dict growth_dict(const GrowthEstimate& g) {
  py::dict d;
  d["mean"] = g.mean;
  d["std_error"] = g.std_error;
  d["tail_mean"] = g.tail_mean;
  d["tail_std_error"] = g.tail_std_error;
  d["n_paths"] = g.n_paths;
  d["T"] = g.T;
  d["per_path"] = g.per_path;
  return d;
}

ValueVariant variant_from(const std::string& s) {
  if (s == "fixed_cost") return ValueVariant::fixed_cost;
  if (s == "proportional") return ValueVariant::proportional;
  throw DomainError("variant must be 'fixed_cost' or 'proportional'");
}

}  // namespace

PYBIND11_MODULE(_growthopt, m) {
  m.doc() = "Growth-optimal portfolios under fixed plus proportional transaction costs";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<AssumptionError>(m, "AssumptionError", PyExc_RuntimeError);

  py::class_<MarketModel>(m, "MarketModel")
      .def(py::init<int, std::vector<double>, std::vector<double>, std::vector<double>, std::vector<std::string>>(),
           py::arg("n_assets"), py::arg("transition"), py::arg("shock_probs"), py::arg("returns"),
           py::arg("asset_names") = std::vector<std::string>{})
      .def_property_readonly("n_assets", &MarketModel::n_assets)
      .def_property_readonly("n_factors", &MarketModel::n_factors)
      .def_property_readonly("n_shocks", &MarketModel::n_shocks)
      .def("returns", [](const MarketModel& mm, int z, int xi) {
        auto r = mm.returns(z, xi);
        return std::vector<double>(r.begin(), r.end());
      });

  py::enum_<CostVariant>(m, "CostVariant").value("additive", CostVariant::additive).value("max", CostVariant::max);

  py::class_<CostSpec>(m, "CostSpec")
      .def(py::init<>())
      .def_readwrite("buy_rates", &CostSpec::buy_rates)
      .def_readwrite("sell_rates", &CostSpec::sell_rates)
      .def_readwrite("fixed", &CostSpec::fixed)
      .def_property(
          "variant", [](const CostSpec& c) { return to_string(c.variant); },
          [](CostSpec& c, const std::string& v) { c.variant = cost_variant_from_string(v); })
      .def("proportional_only", &CostSpec::proportional_only)
      .def("max_rate", &CostSpec::max_rate)
      .def_static("uniform", &CostSpec::uniform, py::arg("n_assets"), py::arg("rate"), py::arg("fixed") = 0.0,
                  py::arg("variant") = CostVariant::additive);

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<>())
      .def_readwrite("simplex_order", &GridSpec::simplex_order)
      .def_readwrite("x_min", &GridSpec::x_min)
      .def_readwrite("x_max", &GridSpec::x_max)
      .def_readwrite("n_x", &GridSpec::n_x);

  py::class_<Policy>(m, "Policy")
      .def_readonly("impulse", &Policy::impulse)
      .def_readonly("target", &Policy::target)
      .def_readonly("beta", &Policy::beta)
      .def_readonly("tag", &Policy::tag)
      .def("wealth_free", &Policy::wealth_free);

  m.def("load_model", [](const std::string& path) {
    ModelBundle b = load_model(path);
    return py::make_tuple(b.model, b.costs);
  }, py::arg("path"), "Reads a model file; returns (MarketModel, CostSpec).");
  m.def("parse_model", [](const std::string& text) {
    ModelBundle b = parse_model(nlohmann::json::parse(text));
    return py::make_tuple(b.model, b.costs);
  }, py::arg("json_text"));
  m.def("model_hash", [](const MarketModel& mm, const CostSpec& c) { return hash_hex(model_hash(mm, c)); });

  m.def("validate", [](const MarketModel& mm) {
    const ValidationReport v = validate(mm);
    py::dict d;
    d["ok"] = v.ok;
    d["ergodic"] = v.ergodic;
    d["returns_positive"] = v.returns_positive;
    d["dobrushin_n"] = v.dobrushin_n;
    d["kappa"] = v.kappa;
    d["violations"] = v.violations;
    return d;
  });
  m.def("invariant_measure", &invariant_measure);
  m.def("dobrushin", &dobrushin, py::arg("model"), py::arg("n"));
  m.def("p_hat", [](const MarketModel& mm) { return growth_floor(mm).p_hat; });
  m.def("expected_log_return", [](const MarketModel& mm, const std::vector<double>& pi, int z) {
    return expected_log_return(mm, pi, z);
  });

  m.def("proportional_cost", [](const CostSpec& s, const std::vector<double>& a, const std::vector<double>& b) {
    return proportional_cost(s, a, b);
  });
  m.def("solve_e", [](const CostSpec& s, const std::vector<double>& pm, const std::vector<double>& pi, double x) {
    return solve_e(s, pm, pi, x);
  }, py::arg("spec"), py::arg("pi_minus"), py::arg("pi"), py::arg("x_minus"));
  m.def("solve_e_bisect", [](const CostSpec& s, const std::vector<double>& pm, const std::vector<double>& pi,
                             double x) { return solve_e_bisect(s, pm, pi, x); });
  m.def("cost_constants", [](const CostSpec& s, double p_hat) { return constants_dict(cost_constants(s, p_hat)); });

  m.def("solve_discounted", [](const MarketModel& mm, const CostSpec& s, const GridSpec& g, double beta,
                               const std::string& variant) {
    const DiscountedSolution sol = solve_discounted(mm, s, g, beta, variant_from(variant));
    py::dict d;
    d["values"] = sol.value.values;
    d["sup"] = sol.value.sup();
    d["inf"] = sol.value.inf();
    d["span"] = span_seminorm(sol.value);
    d["iterations"] = sol.report.iterations;
    d["error_bound"] = sol.report.error_bound;
    d["policy"] = sol.policy;
    return d;
  }, py::arg("model"), py::arg("spec"), py::arg("grid"), py::arg("beta"), py::arg("variant") = "fixed_cost");

  m.def("vanishing_discount", [](const MarketModel& mm, const CostSpec& s, const GridSpec& g,
                                 const std::vector<double>& betas) {
    VanishingDiscountOptions o;
    o.betas = betas;
    const VanishingDiscountResult r = vanishing_discount(mm, s, g, o);
    py::dict d = report_dict(r.report);
    d["policy"] = r.policy;
    d["prop_policy"] = r.prop_policy;
    return d;
  }, py::arg("model"), py::arg("spec"), py::arg("grid"), py::arg("betas") = std::vector<double>{0.9, 0.99, 0.995, 0.999});

  m.def("average_growth", [](const MarketModel& mm, const CostSpec& s, const Policy& policy,
                             const std::string& strategy, const std::vector<double>& pi0, double x0, int z0, long T,
                             long n_paths, std::uint64_t seed) {
    std::unique_ptr<Strategy> strat;
    if (strategy == "grid")
      strat = std::make_unique<GridPolicyStrategy>(policy);
    else if (strategy == "mimicking")
      strat = std::make_unique<MimickingStrategy>(
          build_mimicking(policy, cost_constants(s, growth_floor(mm).p_hat)));
    else
      throw DomainError("strategy must be 'grid' or 'mimicking'");
    InitialState init{pi0, x0, z0};
    py::gil_scoped_release release;
    return average_growth(mm, s, *strat, init, T, n_paths, seed);
  }, py::arg("model"), py::arg("spec"), py::arg("policy"), py::arg("strategy") = "grid", py::arg("pi0"),
     py::arg("x0"), py::arg("z0") = 0, py::arg("T") = 5000, py::arg("n_paths") = 400, py::arg("seed") = 1);

  py::class_<GrowthEstimate>(m, "GrowthEstimate")
      .def_readonly("mean", &GrowthEstimate::mean)
      .def_readonly("std_error", &GrowthEstimate::std_error)
      .def_readonly("tail_mean", &GrowthEstimate::tail_mean)
      .def_readonly("per_path", &GrowthEstimate::per_path)
      .def("as_dict", &growth_dict);

  m.def("ld_tail", [](const MarketModel& mm, const std::vector<long>& T_grid, double eps, long n_paths,
                      std::uint64_t seed) {
    const LdReport r = ld_tail(mm, T_grid, eps, n_paths, seed);
    py::dict d;
    std::vector<double> probs;
    for (const LdRow& row : r.rows) probs.push_back(row.tail_prob);
    d["tail_prob"] = probs;
    d["slope"] = r.slope;
    d["slope_se"] = r.slope_se;
    d["negative_95"] = r.negative_95;
    return d;
  });

  m.def("run_command", [](const std::string& command, const std::string& config_path, py::object output_dir,
                          py::object seed, double beta, const std::string& policy, const std::string& strategy) {
    cli::CommandOptions o;
    o.config_path = config_path;
    if (!output_dir.is_none()) o.output_dir = output_dir.cast<std::string>();
    if (!seed.is_none()) o.seed = seed.cast<std::uint64_t>();
    o.beta = beta;
    o.policy_path = policy;
    o.strategy = strategy;
    std::ostringstream log;
    const cli::CommandResult r = cli::run_command(command, o, log);
    return py::make_tuple(r.exit_code, r.report.dump(), log.str());
  }, py::arg("command"), py::arg("config"), py::arg("output_dir") = py::none(), py::arg("seed") = py::none(),
     py::arg("beta") = 0.0, py::arg("policy") = "", py::arg("strategy") = "grid",
     "Runs a CLI subcommand; returns (exit_code, report_json, log).");
}
