#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "growthopt/average_optimizer.hpp"
#include "growthopt/config.hpp"
#include "growthopt/model_io.hpp"
#include "growthopt/simulator.hpp"
#include "growthopt/value_io.hpp"
#include "growthopt/verify.hpp"

#ifndef GROWTHOPT_VERSION
#define GROWTHOPT_VERSION "0.0.0"
#endif

namespace growthopt::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  std::string command;
  std::string config_path;
  RunConfig cfg;
  std::optional<ModelBundle> bundle;
  std::uint64_t hash = 0;
  std::uint64_t seed = 0;
  fs::path out_dir;
  json outputs = json::array();
  std::vector<std::string> paths;

  void write(const std::string& name, const std::string& contents) {
    const fs::path p = out_dir / name;
    write_atomic(p.string(), contents);
    outputs.push_back(json{{"file", name}, {"fnv1a64", hash_hex(fnv1a64(contents))}});
    paths.push_back(p.string());
  }
};

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) throw UsageError("no config file given (--config)");
  if (!fs::exists(path)) throw UsageError("config file not found: " + path);
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw UsageError("config file " + path + " is not valid JSON: " + ex.what());
  }
  if (!j.is_object() || j.empty()) throw UsageError("config file " + path + " is empty");
  return parse_config(j, fs::path(path).parent_path().string());
}

std::vector<double> initial_pi(const RunConfig& cfg, int d) {
  std::vector<double> pi = cfg.simulation.pi0;
  if (pi.empty()) {
    pi.assign(d, 0.0);
    pi[0] = 1.0;
  }
  if (static_cast<int>(pi.size()) != d) throw DomainError("simulation.pi0 has the wrong length");
  require_simplex(pi, "simulation.pi0");
  return pi;
}

std::string beta_label(double beta) { return format_double(beta); }

json constants_json(const CostConstants& c) {
  return json{{"eta", c.eta}, {"eta_M", c.eta_M}, {"M", c.M}, {"M_star", c.M_star}, {"x_star", c.x_star},
              {"c_hat", c.c_hat}};
}

double min_log_worst(const MarketModel& model) {
  double lo = std::numeric_limits<double>::infinity();
  for (int z = 0; z < model.n_factors(); ++z)
    for (int xi = 0; xi < model.n_shocks(); ++xi) lo = std::min(lo, std::log(model.worst_return(z, xi)));
  return lo;
}

int cmd_validate(Context& ctx, json& report) {
  const MarketModel& model = ctx.bundle->model;
  const CostSpec& spec = ctx.bundle->costs;
  const ValidationReport v = validate(model);
  report["rows_stochastic"] = v.rows_stochastic;
  report["shocks_normalized"] = v.shocks_normalized;
  report["dobrushin_n"] = v.dobrushin_n;
  report["kappa"] = v.kappa;
  report["violations"] = v.violations;

  bool a2 = v.returns_positive;
  bool a6 = false;
  if (v.ergodic && v.rows_stochastic && v.shocks_normalized && v.returns_positive) {
    const GrowthFloor floor = growth_floor(model);
    report["invariant_measure"] = invariant_measure(model);
    report["p_hat"] = floor.p_hat;
    report["eta"] = eta_of(spec.max_rate());
    try {
      const CostConstants c = cost_constants(spec, floor.p_hat);
      report["constants"] = constants_json(c);
      a6 = true;
    } catch (const AssumptionError& ex) {
      report["violations"].push_back(ex.what());
    }
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    const SimplexMesh mesh(model.n_assets(), ctx.cfg.grid.simplex_order);
    for (int z = 0; z < model.n_factors(); ++z)
      for (int a = 0; a < mesh.size(); ++a) {
        const double h = expected_log_return(model, mesh.node(a), z);
        lo = std::min(lo, h);
        hi = std::max(hi, h);
      }
    a2 = a2 && std::isfinite(lo) && std::isfinite(hi);
    report["h_range"] = {lo, hi};
  }
  report["assumptions"] = json{{"A2_bounded_growth", a2},
                               {"A3_uniformly_ergodic", v.ergodic},
                               {"A5_positive_returns", v.returns_positive},
                               {"A6_cost_below_floor", a6}};
  const bool ok = v.ok && a2 && a6;
  report["ok"] = ok;
  ctx.write("validate.json", report.dump(2) + "\n");
  return ok ? kExitOk : kExitFailure;
}

ValueVariant parse_variant(const std::string& s) {
  if (s == "fixed_cost" || s == "fixed") return ValueVariant::fixed_cost;
  if (s == "proportional" || s == "prop") return ValueVariant::proportional;
  throw UsageError("unknown --variant '" + s + "' (fixed_cost | proportional)");
}

int cmd_solve(Context& ctx, const CommandOptions& opt, json& report) {
  if (!(opt.beta > 0.0 && opt.beta < 1.0)) throw DomainError("--beta must lie in (0, 1)");
  const ValueVariant variant = parse_variant(opt.variant);
  const CostSpec spec = variant == ValueVariant::proportional ? ctx.bundle->costs.proportional_only() : ctx.bundle->costs;
  const DiscountedProblem problem(ctx.bundle->model, spec, ctx.cfg.grid, opt.beta, variant, ctx.cfg.solver);
  const DiscountedSolution sol = solve_discounted(problem);
  const std::string stem = "solve_beta_" + beta_label(opt.beta) + (variant == ValueVariant::proportional ? "_prop" : "");
  ctx.write(stem + ".csv", value_policy_csv(sol.value, sol.policy));
  ctx.write(stem + ".json", value_policy_header(sol.value, sol.policy, ctx.hash, ctx.seed).dump(2) + "\n");
  long impulses = 0;
  for (auto b : sol.policy.impulse) impulses += b;
  report["beta"] = opt.beta;
  report["variant"] = to_string(variant);
  report["warmup_iterations"] = sol.report.warmup_iterations;
  report["iterations"] = sol.report.iterations;
  report["final_delta"] = sol.report.final_delta;
  report["error_bound"] = sol.report.error_bound;
  report["sup"] = sol.value.sup();
  report["inf"] = sol.value.inf();
  report["span"] = span_seminorm(sol.value);
  report["impulse_fraction"] = static_cast<double>(impulses) / static_cast<double>(sol.policy.impulse.size());
  report["policy_ref"] = stem + ".csv";
  ctx.write(stem + "_report.json", report.dump(2) + "\n");
  return kExitOk;
}

int cmd_optimal(Context& ctx, json& report) {
  const MarketModel& model = ctx.bundle->model;
  const CostSpec& spec = ctx.bundle->costs;
  VanishingDiscountOptions vo;
  vo.betas = ctx.cfg.betas;
  vo.solver = ctx.cfg.solver;
  const VanishingDiscountResult vd = vanishing_discount(model, spec, ctx.cfg.grid, vo);
  const VanishingDiscountReport& r = vd.report;

  const DiscountedProblem problem(model, spec, ctx.cfg.grid, r.betas.back(), ValueVariant::fixed_cost, ctx.cfg.solver);
  const ResidualReport res = bellman_residual(problem, vd.policy, vd.w, r.lambda, ctx.cfg.grid_tol);

  ctx.write("policy.csv", value_policy_csv(vd.value, vd.policy));
  ctx.write("policy.json", value_policy_header(vd.value, vd.policy, ctx.hash, ctx.seed).dump(2) + "\n");
  ctx.write("policy_prop.csv", value_policy_csv(vd.prop_value, vd.prop_policy));
  ctx.write("policy_prop.json", value_policy_header(vd.prop_value, vd.prop_policy, ctx.hash, ctx.seed).dump(2) + "\n");

  json extremes = json::array();
  for (const auto& [lo, hi] : r.w_beta_extremes) extremes.push_back({lo, hi});
  report["betas"] = r.betas;
  report["m_beta"] = r.m_beta;
  report["lambda_estimates"] = r.lambda_estimates;
  report["sup_fixed"] = r.sup_fixed;
  report["lambda_fixed_estimates"] = r.lambda_fixed_estimates;
  report["w_beta_extremes"] = extremes;
  report["span_prop"] = r.span_prop;
  report["lambda"] = r.lambda;
  report["lambda_extrapolated"] = r.lambda_extrapolated;
  report["lambda_fixed"] = r.lambda_fixed;
  report["lambda_fixed_extrapolated"] = r.lambda_fixed_extrapolated;
  report["last_difference"] = r.last_difference;
  report["policy_disagreement"] = r.policy_disagreement;
  report["converged"] = r.converged;
  report["diagnostics"] = r.diagnostics;
  report["residual_summary"] = json{{"min_slack", res.min_slack},     {"mean_slack", res.mean_slack},
                                    {"max_slack", res.max_slack},     {"grid_tol", res.grid_tol},
                                    {"passed", res.passed},           {"form", res.form}};
  const double diff = std::abs(r.lambda_fixed - r.lambda);
  report["cross_check"] = json{{"lambda_fixed", r.lambda_fixed},
                               {"lambda_prop", r.lambda},
                               {"difference", diff},
                               {"cross_tol", ctx.cfg.cross_tol},
                               {"passed", diff <= ctx.cfg.cross_tol}};
  try {
    report["constants"] = constants_json(cost_constants(spec, growth_floor(model).p_hat));
  } catch (const AssumptionError& ex) {
    report["constants"] = json{{"error", ex.what()}};
  }
  report["policy_ref"] = "policy.csv";
  report["prop_policy_ref"] = "policy_prop.csv";
  ctx.write("optimal.json", report.dump(2) + "\n");
  return r.converged ? kExitOk : kExitFailure;
}

int cmd_simulate(Context& ctx, const CommandOptions& opt, json& report) {
  if (opt.policy_path.empty()) throw UsageError("simulate needs --policy FILE");
  const MarketModel& model = ctx.bundle->model;
  const CostSpec& spec = ctx.bundle->costs;
  const LoadedPolicy loaded = read_policy(opt.policy_path);
  const std::string policy_hash = loaded.header.value("model_hash", std::string());
  if (policy_hash != hash_hex(ctx.hash))
    throw DomainError("policy " + opt.policy_path + " was computed for model " + policy_hash + ", config model is " +
                      hash_hex(ctx.hash));

  std::unique_ptr<Strategy> strategy;
  if (opt.strategy == "grid") {
    strategy = std::make_unique<GridPolicyStrategy>(loaded.policy);
  } else if (opt.strategy == "mimicking") {
    const CostConstants c = cost_constants(spec, growth_floor(model).p_hat);
    strategy = std::make_unique<MimickingStrategy>(build_mimicking(loaded.policy, c));
    report["constants"] = constants_json(c);
  } else {
    throw UsageError("unknown --strategy '" + opt.strategy + "' (grid | mimicking)");
  }

  const long T = opt.T.value_or(ctx.cfg.simulation.T);
  const long n_paths = opt.n_paths.value_or(ctx.cfg.simulation.n_paths);
  if (T < 1 || n_paths < 1) throw DomainError("T and n_paths must be >= 1");
  InitialState init;
  init.pi_minus = initial_pi(ctx.cfg, model.n_assets());
  init.x_minus = ctx.cfg.simulation.x0;
  init.z = ctx.cfg.simulation.z0;
  if (init.z < 0 || init.z >= model.n_factors()) throw DomainError("simulation.z0 out of range");

  // Path 0 again, in full, for the trajectory file.
  std::unique_ptr<Strategy> first = strategy->clone();
  Trajectory traj =
      run(model, spec, *first, init.pi_minus, init.x_minus, init.z, T, derive_seed(ctx.seed, 0));
  traj.model_hash = ctx.hash;
  ctx.write("trajectory.csv", trajectory_csv(traj));
  if (traj.annihilated) throw AssumptionError("path 0 was annihilated by an unaffordable transaction");

  const GrowthEstimate g = average_growth(model, spec, *strategy, init, T, n_paths, ctx.seed);
  std::string paths = "path,seed,growth\n";
  for (long k = 0; k < n_paths; ++k)
    paths += std::to_string(k) + "," + std::to_string(derive_seed(ctx.seed, k)) + "," + format_double(g.per_path[k]) + "\n";
  ctx.write("growth_paths.csv", paths);

  report["strategy"] = strategy->name();
  report["policy_file"] = fs::path(opt.policy_path).filename().string();
  report["policy_tag"] = loaded.policy.tag;
  report["T"] = T;
  report["n_paths"] = n_paths;
  report["seed"] = ctx.seed;
  report["x0"] = init.x_minus;
  report["growth"] = json{{"mean", g.mean},
                          {"std_error", g.std_error},
                          {"tail_mean", g.tail_mean},
                          {"tail_std_error", g.tail_std_error},
                          {"tail_minus_full", g.tail_mean - g.mean}};
  report["annihilated_paths"] = g.annihilated_paths;
  if (opt.report_path) {
    const json opt_report = json::parse(read_file(*opt.report_path));
    const double lambda = opt_report.at("lambda").get<double>();
    const double tol = std::max(3.0 * g.std_error, 1e-2);
    report["lambda"] = lambda;
    report["tolerance"] = tol;
    report["within_tolerance"] = std::abs(g.mean - lambda) <= tol;
  }
  ctx.write("simulate_" + opt.strategy + ".json", report.dump(2) + "\n");
  return kExitOk;
}

int cmd_ldcheck(Context& ctx, const CommandOptions& opt, json& report) {
  const MarketModel& model = ctx.bundle->model;
  const double p_hat = growth_floor(model).p_hat;
  double eps = opt.eps.value_or(ctx.cfg.ld.eps);
  if (eps < 0.0) throw DomainError("--eps must be >= 0");
  if (eps == 0.0) eps = 0.25 * (p_hat - min_log_worst(model));
  const LdReport ld = ld_tail(model, ctx.cfg.ld.T_grid, eps, ctx.cfg.ld.n_paths, ctx.seed);
  ctx.write("ld.csv", ld_csv(ld));
  report["p_hat"] = p_hat;
  report["eps"] = eps;
  report["n_paths"] = ctx.cfg.ld.n_paths;
  report["T_grid"] = ctx.cfg.ld.T_grid;
  report["slope"] = ld.slope;
  report["slope_se"] = ld.slope_se;
  report["points_used"] = ld.points_used;
  report["negative_95"] = ld.negative_95;
  ctx.write("ld.json", report.dump(2) + "\n");
  return kExitOk;
}

int cmd_verify(Context& ctx, const CommandOptions& opt, json& report, std::ostream& log) {
  VerifyOptions vo;
  vo.seed = ctx.seed;
  if (opt.samples) vo.samples = *opt.samples;
  const std::vector<CheckResult> checks = verify_all(*ctx.bundle, ctx.cfg, vo);
  json list = json::array();
  long failed = 0;
  for (const CheckResult& c : checks) {
    list.push_back(json{{"suite", c.suite}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    log << (c.passed ? "PASS " : "FAIL ") << c.suite << ": " << c.name << " (" << c.detail << ")\n";
    failed += c.passed ? 0 : 1;
  }
  report["checks"] = list;
  report["failed"] = failed;
  report["passed"] = failed == 0;
  ctx.write("verify.json", report.dump(2) + "\n");
  return failed == 0 ? kExitOk : kExitFailure;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_error(Context& ctx, const std::string& type, const std::string& message, int code, std::ostream& log) {
  const json err{{"error", {{"command", ctx.command}, {"type", type}, {"message", message}, {"exit_code", code}}}};
  log << err.dump() << "\n";
  if (ctx.out_dir.empty()) return;
  try {
    fs::create_directories(ctx.out_dir);
    ctx.write("error_" + ctx.command + ".json", err.dump(2) + "\n");
  } catch (const std::exception&) {
    // The error already went to the log.
  }
}

}  // namespace

void apply_thread_env() {
#ifdef _OPENMP
  if (const char* s = std::getenv("GROWTHOPT_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

CommandResult run_command(const std::string& command, const CommandOptions& options, std::ostream& log) {
  CommandResult result;
  Context ctx;
  ctx.command = command;
  ctx.config_path = options.config_path;
  const auto started = std::chrono::steady_clock::now();
  const std::string started_utc = utc_now();
  try {
    ctx.cfg = load_run_config(options.config_path);
    if (options.output_dir) ctx.cfg.output_dir = *options.output_dir;
    ctx.out_dir = ctx.cfg.output_dir;
    ctx.bundle = load_bundle(ctx.cfg);
    ctx.hash = model_hash(ctx.bundle->model, ctx.bundle->costs);
    if (command == "simulate") ctx.seed = options.seed.value_or(ctx.cfg.simulation.seed);
    else if (command == "ldcheck") ctx.seed = options.seed.value_or(ctx.cfg.ld.seed);
    else ctx.seed = options.seed.value_or(ctx.cfg.simulation.seed);
    fs::create_directories(ctx.out_dir);

    json report;
    report["command"] = command;
    report["model_hash"] = hash_hex(ctx.hash);
    if (command == "validate") result.exit_code = cmd_validate(ctx, report);
    else if (command == "solve") result.exit_code = cmd_solve(ctx, options, report);
    else if (command == "optimal") result.exit_code = cmd_optimal(ctx, report);
    else if (command == "simulate") result.exit_code = cmd_simulate(ctx, options, report);
    else if (command == "ldcheck") result.exit_code = cmd_ldcheck(ctx, options, report);
    else if (command == "verify") result.exit_code = cmd_verify(ctx, options, report, log);
    else throw UsageError("unknown command '" + command + "'");
    result.report = report;

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest{{"command", command},
                  {"tool", "growthopt"},
                  {"version", GROWTHOPT_VERSION},
                  {"compiler", __VERSION__},
                  {"config_path", options.config_path},
                  {"config", config_to_json(ctx.cfg)},
                  {"model", model_to_json(ctx.bundle->model, ctx.bundle->costs)},
                  {"model_hash", hash_hex(ctx.hash)},
                  {"seed", ctx.seed},
                  {"exit_code", result.exit_code},
                  {"outputs", ctx.outputs},
                  {"timing", {{"started_utc", started_utc}, {"wall_seconds", wall}}}};
    ctx.write("manifest_" + command + ".json", manifest.dump(2) + "\n");
    result.outputs = ctx.paths;
  } catch (const UsageError& ex) {
    result.exit_code = kExitUsage;
    write_error(ctx, "UsageError", ex.what(), result.exit_code, log);
  } catch (const AssumptionError& ex) {
    result.exit_code = kExitFailure;
    write_error(ctx, "AssumptionError", ex.what(), result.exit_code, log);
  } catch (const DomainError& ex) {
    result.exit_code = kExitFailure;
    write_error(ctx, "DomainError", ex.what(), result.exit_code, log);
  } catch (const std::exception& ex) {
    result.exit_code = kExitFailure;
    write_error(ctx, "RuntimeError", ex.what(), result.exit_code, log);
  }
  return result;
}

}  // namespace growthopt::cli
