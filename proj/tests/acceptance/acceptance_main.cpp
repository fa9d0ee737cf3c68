// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: growthopt_acceptance <data_dir> [work_dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "commands.hpp"
#include "growthopt/average_optimizer.hpp"
#include "growthopt/model_io.hpp"
#include "growthopt/simulator.hpp"
#include "oracles.hpp"

using namespace growthopt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::vector<double> random_simplex(Rng& rng, int d) {
  std::vector<double> p(d);
  double s = 0.0;
  for (double& v : p) {
    // Exact zeros are common in practice (unit vectors, unheld assets).
    v = rng.uniform() < 0.2 ? 0.0 : -std::log(1.0 - rng.uniform());
    s += v;
  }
  if (s == 0.0) {
    p[static_cast<int>(rng.uniform() * d)] = 1.0;
    return p;
  }
  for (double& v : p) v /= s;
  return p;
}

CostSpec random_spec(Rng& rng, int d) {
  CostSpec s;
  const double scale = rng.uniform() < 0.5 ? 0.02 : 0.3;
  for (int i = 0; i < d; ++i) {
    s.buy_rates.push_back(scale * rng.uniform());
    s.sell_rates.push_back(scale * rng.uniform());
  }
  s.fixed = rng.uniform() < 0.25 ? 0.0 : 2.0 * rng.uniform();
  s.variant = rng.uniform() < 0.5 ? CostVariant::additive : CostVariant::max;
  return s;
}

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * rng.uniform());
}

ModelBundle with_costs(const ModelBundle& b, const CostSpec& s) { return ModelBundle{b.model, s}; }

// 1. Piecewise-linear e solver against bisection.
Outcome criterion_e_solver() {
  Rng rng(101);
  const long n = 10000;
  long mismatches = 0, dichotomy = 0, residual = 0, roots = 0;
  double worst = 0.0, solve_seconds = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (long k = 0; k < n; ++k) {
    const int d = 2 + static_cast<int>(rng.uniform() * 3);
    const CostSpec s = random_spec(rng, d);
    const std::vector<double> pm = random_simplex(rng, d);
    const std::vector<double> pi = rng.uniform() < 0.1 ? pm : random_simplex(rng, d);
    const double x = log_uniform(rng, 0.05, 100.0);
    const auto a = std::chrono::steady_clock::now();
    const double e = solve_e(s, pm, pi, x);
    solve_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
    const double ref = oracle::bisect_e(s, pm, pi, x);
    const bool has_root = oracle::budget(s, pm, pi, x, 0.0) < 1.0;
    worst = std::max(worst, std::abs(e - ref));
    if (std::abs(e - ref) > 1e-10) ++mismatches;
    if ((e > 0.0) != has_root) ++dichotomy;
    if (e > 0.0) {
      ++roots;
      if (std::abs(oracle::budget(s, pm, pi, x, e) - 1.0) > 1e-12) ++residual;
    }
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = mismatches == 0 && dichotomy == 0 && residual == 0 && total < 5.0;
  return {ok, std::to_string(n) + " instances (" + std::to_string(roots) + " with a root), max |e - bisection| " +
                  fmt(worst) + ", mismatches " + std::to_string(mismatches) + ", dichotomy errors " +
                  std::to_string(dichotomy) + ", |F(e)-1|>1e-12: " + std::to_string(residual) + ", solver " +
                  fmt(solve_seconds) + " s, total " + fmt(total) + " s"};
}

// 2. Bounds and monotonicity of e.
Outcome criterion_diminution_bounds() {
  Rng rng(202);
  const long n = 10000;
  const double tol = 1e-12;
  long l4a = 0, l4b = 0, l5i = 0, l5ii = 0, l5iii = 0, literal = 0, checked_ii = 0, checked_iii = 0;
  for (long k = 0; k < n; ++k) {
    const int d = 2 + static_cast<int>(rng.uniform() * 3);
    CostSpec s = random_spec(rng, d);
    if (s.fixed == 0.0) s.fixed = rng.uniform();
    const std::vector<double> pm = random_simplex(rng, d);
    const std::vector<double> pi = rng.uniform() < 0.1 ? pm : random_simplex(rng, d);
    const double x = log_uniform(rng, 0.05, 1000.0);
    const double x_lo = x * rng.uniform();
    const double c_hat = s.max_rate();
    const double e = solve_e(s, pm, pi, x);
    const double e_lo = solve_e(s, pm, pi, x_lo);
    const double et = solve_e_prop(s, pm, pi);

    if (1.0 - et > 2.0 * c_hat / (1.0 - c_hat) + tol) ++l4a;
    if (1.0 - e > (2.0 * c_hat + s.fixed / x) / (1.0 - c_hat) + tol) ++l4b;
    if (e_lo > e + tol || e > et + tol) ++l5i;

    const double max_sell = s.max_sell_rate();
    const double max_buy = s.max_buy_rate();
    const double x_star = oracle::x_star_closed(s);
    if (x > x_star) {
      ++checked_ii;
      if (et - e > s.fixed / ((1.0 - max_sell) * x) + tol) ++l5ii;
      if (et - e > s.fixed / ((1.0 - max_buy) * x) + tol) ++literal;
      // M drawn between x* and x.
      const double M = x_star + (x - x_star) * (0.05 + 0.95 * rng.uniform());
      const double inf_e = oracle::min_vertex_e(s, M, true);
      if (inf_e > 0.0 && e > 0.0) {
        ++checked_iii;
        if (std::log(et / e) > s.fixed / ((1.0 - max_sell) * x) / inf_e + tol) ++l5iii;
      }
    }
  }
  const bool ok = l4a == 0 && l4b == 0 && l5i == 0 && l5ii == 0 && l5iii == 0;
  return {ok, std::to_string(n) + " samples; violations: bound on 1-e~ " + std::to_string(l4a) + ", bound on 1-e " +
                  std::to_string(l4b) + ", monotone in wealth " + std::to_string(l5i) + ", gap e~-e " +
                  std::to_string(l5ii) + "/" + std::to_string(checked_ii) + ", log gap " + std::to_string(l5iii) +
                  "/" + std::to_string(checked_iii) +
                  " (gap bounds use 1 - max sell rate; with 1 - max buy rate the gap bound fails on " +
                  std::to_string(literal) + " samples)"};
}

// 3. Cost-free solver oracle and contraction.
Outcome criterion_solver_oracle(const ModelBundle& bundle) {
  const CostSpec free = CostSpec::uniform(bundle.model.n_assets(), 0.0);
  GridSpec g;
  g.simplex_order = 8;
  const double beta = 0.99;
  const DiscountedSolution sol = solve_discounted(bundle.model, free, g, beta, ValueVariant::fixed_cost);
  const std::vector<double> ref = oracle::cost_free_value(bundle.model, 8, beta);
  double err = 0.0;
  const StateGrid& grid = sol.value.grid;
  for (int z = 0; z < grid.n_factors; ++z)
    for (int j = 0; j < grid.n_wealth(); ++j)
      for (int a = 0; a < grid.n_nodes(); ++a) err = std::max(err, std::abs(sol.value.at(a, j, z) - ref[z]));

  // Contraction on the problem with the bundled costs (wealth axis present).
  const double beta_c = 0.9;
  const DiscountedProblem problem(bundle.model, bundle.costs, g, beta_c, ValueVariant::fixed_cost);
  Rng rng(303);
  const std::size_t n = problem.size();
  std::vector<double> v(n), w(n), tv(n), tw(n);
  long bad = 0;
  double worst_ratio = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double scale = k % 2 == 0 ? 1.0 : 50.0;
    for (std::size_t s = 0; s < n; ++s) {
      v[s] = scale * (rng.uniform() - 0.5);
      w[s] = scale * (rng.uniform() - 0.5);
    }
    problem.bellman(v, tv);
    problem.bellman(w, tw);
    double dv = 0.0, dt = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      dv = std::max(dv, std::abs(v[s] - w[s]));
      dt = std::max(dt, std::abs(tv[s] - tw[s]));
    }
    worst_ratio = std::max(worst_ratio, dt / dv);
    if (dt > beta_c * dv + 1e-12) ++bad;
  }
  const bool ok = err <= 1e-6 && bad == 0;
  return {ok, "m=8, n_z=2, beta=0.99: sup |v - oracle| " + fmt(err) + "; contraction on 100 pairs (" +
                  std::to_string(n) + " states): worst ratio " + fmt(worst_ratio) + " vs beta 0.9, violations " +
                  std::to_string(bad)};
}

double oracle_span_bound(const ModelBundle& bundle, int order) {
  const MarketModel& m = bundle.model;
  const auto pts = oracle::simplex_points(m.n_assets(), order);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int z = 0; z < m.n_factors(); ++z)
    for (const auto& p : pts) {
      const double h = oracle::h(m, p, z);
      lo = std::min(lo, h);
      hi = std::max(hi, h);
    }
  const double e_low = oracle::min_vertex_e(bundle.costs, 1.0, false);
  double best = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= kDefaultDobrushinHorizon; ++n) {
    const double kappa = oracle::dobrushin_sets(m, n);
    if (kappa < 1.0) best = std::min(best, (n * (hi - lo) - (n + 2) * std::log(e_low)) / (1.0 - kappa));
  }
  return best;
}

// 4. Span bound across the beta sweep.
Outcome criterion_span(const ModelBundle& bundle) {
  GridSpec g;
  g.simplex_order = 8;
  const CostSpec prop = bundle.costs.proportional_only();
  const double bound = oracle_span_bound(bundle, g.simplex_order);
  const double lib_bound = span_bound(bundle.model, prop, SimplexMesh(bundle.model.n_assets(), g.simplex_order));
  bool ok = true;
  std::string spans, norms;
  double prev_norm = 0.0;
  for (double beta : {0.9, 0.99, 0.999, 0.9999}) {
    const DiscountedSolution sol = solve_discounted(bundle.model, prop, g, beta, ValueVariant::proportional);
    const double span = span_seminorm(sol.value);
    const double norm = std::max(std::abs(sol.value.sup()), std::abs(sol.value.inf()));
    ok = ok && span <= bound && norm > prev_norm;
    prev_norm = norm;
    spans += (spans.empty() ? "" : ", ") + fmt(span);
    norms += (norms.empty() ? "" : ", ") + fmt(norm);
  }
  return {ok, "beta 0.9..0.9999: span " + spans + " <= bound " + fmt(bound) + " (library " + fmt(lib_bound) +
                  "); sup norm " + norms};
}

// 5. Free rebalancing growth rate.
Outcome criterion_free_growth(const ModelBundle& bundle) {
  GridSpec g;
  g.simplex_order = 16;
  const CostSpec free = CostSpec::uniform(bundle.model.n_assets(), 0.0);
  const VanishingDiscountResult r = vanishing_discount(bundle.model, free, g);
  const double ref = oracle::free_rebalancing_growth(bundle.model, 16);
  const double diff = std::abs(r.report.lambda - ref);
  return {diff <= 1e-4, "m=16: lambda " + fmt(r.report.lambda) + " (extrapolated " + fmt(r.report.lambda_extrapolated) +
                            ") vs sum theta max h " + fmt(ref) + ", |diff| " + fmt(diff)};
}

GridSpec bundled_grid() {
  GridSpec g;
  g.simplex_order = 16;
  g.x_min = 5e-3;
  g.x_max = 1e4;
  g.n_x = 16;
  return g;
}

// 6. Fixed versus proportional growth and wealth-grid refinement.
Outcome criterion_cross_check(const ModelBundle& bundle) {
  GridSpec g = bundled_grid();
  const CrossCheckReport a = cross_check_costs(bundle.model, bundle.costs, g);
  g.x_max *= 10.0;
  const CrossCheckReport b = cross_check_costs(bundle.model, bundle.costs, g);
  const bool ok = a.passed && a.difference <= 5e-3 && b.difference < a.difference;
  return {ok, "x_max 1e4: |" + fmt(a.lambda_fixed) + " - " + fmt(a.lambda_prop) + "| = " + fmt(a.difference) +
                  "; x_max 1e5: " + fmt(b.difference)};
}

// 7. Closed loop growth of the extracted and the mimicking policies.
Outcome criterion_closed_loop(const ModelBundle& bundle) {
  const VanishingDiscountResult vd = vanishing_discount(bundle.model, bundle.costs, bundled_grid());
  const double lambda = vd.report.lambda;
  const CostConstants c = cost_constants(bundle.costs, growth_floor(bundle.model).p_hat);
  InitialState init;
  init.pi_minus = {1.0, 0.0};
  init.x_minus = 10.0;
  init.z = 0;
  const GridPolicyStrategy grid(vd.policy);
  const MimickingStrategy mim(build_mimicking(vd.prop_policy, c));
  const GrowthEstimate ga = average_growth(bundle.model, bundle.costs, grid, init, 5000, 400, 20240521);
  const GrowthEstimate gm = average_growth(bundle.model, bundle.costs, mim, init, 5000, 400, 20240521);
  const double ta = std::max(3.0 * ga.std_error, 1e-2);
  const double tm = std::max(3.0 * gm.std_error, 1e-2);
  const bool ok = std::abs(ga.mean - lambda) <= ta && std::abs(gm.mean - lambda) <= tm;
  return {ok, "lambda " + fmt(lambda) + "; extracted policy " + fmt(ga.mean) + " (SE " + fmt(ga.std_error) +
                  "), mimicking " + fmt(gm.mean) + " (SE " + fmt(gm.std_error) + "), tolerance " + fmt(ta)};
}

double eps_auto(const MarketModel& m) {
  double lo = std::numeric_limits<double>::infinity();
  for (int z = 0; z < m.n_factors(); ++z)
    for (int xi = 0; xi < m.n_shocks(); ++xi) lo = std::min(lo, std::log(m.worst_return(z, xi)));
  return 0.25 * (oracle::p_hat(m) - lo);
}

// 8. Large deviations of the worst-asset log return.
Outcome criterion_ld(const ModelBundle& bundle, const ModelBundle& iid) {
  const LdReport a = ld_tail(bundle.model, {5, 10, 15, 20, 25, 30, 35, 40}, eps_auto(bundle.model), 100000, 7);

  const std::vector<long> Ts{10, 20, 30, 40, 50, 60, 70, 80};
  const double eps = eps_auto(iid.model);
  const LdReport b = ld_tail(iid.model, Ts, eps, 100000, 8);
  std::vector<double> values, probs;
  for (int xi = 0; xi < iid.model.n_shocks(); ++xi) {
    values.push_back(std::log(iid.model.worst_return(0, xi)));
    probs.push_back(iid.model.shock_probs()[xi]);
  }
  const double rate = oracle::cramer_rate(values, probs, oracle::p_hat(iid.model) - eps);
  const double ratio = -b.slope / rate;
  const bool ok = a.negative_95 && ratio >= 0.5 && ratio <= 2.0;
  return {ok, "2-factor slope " + fmt(a.slope) + " +- " + fmt(1.96 * a.slope_se) + " (negative at 95%: " +
                  (a.negative_95 ? "yes" : "no") + "); i.i.d. slope " + fmt(b.slope) + " vs Cramer rate " + fmt(rate) +
                  ", ratio " + fmt(ratio)};
}

// 9. Pathwise wealth floor.
Outcome criterion_floor(const ModelBundle& bundle) {
  const VanishingDiscountResult vd = vanishing_discount(bundle.model, bundle.costs, bundled_grid());
  const CostConstants c = cost_constants(bundle.costs, growth_floor(bundle.model).p_hat);
  const CostSpec prop = bundle.costs.proportional_only();
  const std::vector<double> pi0{1.0, 0.0};
  const long paths = 1000, T = 2000;
  long bad_prop = 0, bad_mim = 0, bad_rebal = 0, points = 0;
  double slack = std::numeric_limits<double>::infinity();
  GridPolicyStrategy prop_policy(vd.prop_policy);
  MimickingStrategy mim(build_mimicking(vd.prop_policy, c));
  ConstantRebalance rebal({0.5, 0.5});
  for (long k = 0; k < paths; ++k) {
    const std::uint64_t seed = derive_seed(909, k);
    prop_policy.reset();
    mim.reset();
    const FloorReport a = wealth_floor_check(run(bundle.model, prop, prop_policy, pi0, 10.0, 0, T, seed), bundle.model, c.eta);
    const FloorReport b =
        wealth_floor_check(run(bundle.model, bundle.costs, mim, pi0, 10.0, 0, T, seed), bundle.model, c.eta_M);
    const FloorReport r = wealth_floor_check(run(bundle.model, prop, rebal, pi0, 10.0, 0, T, seed), bundle.model, c.eta);
    bad_prop += a.violations;
    bad_mim += b.violations;
    bad_rebal += r.violations;
    points += a.points_checked + b.points_checked + r.points_checked;
    slack = std::min({slack, a.min_slack, b.min_slack, r.min_slack});
  }
  const bool ok = bad_prop == 0 && bad_mim == 0 && bad_rebal == 0;
  return {ok, std::to_string(paths) + " paths x T=" + std::to_string(T) + " per strategy, " + std::to_string(points) +
                  " points; violations: proportional policy " + std::to_string(bad_prop) + ", mimicking " +
                  std::to_string(bad_mim) + ", constant rebalance " + std::to_string(bad_rebal) + "; min log slack " +
                  fmt(slack)};
}

// 10. Max-variant cost between additive bounds, and its growth rate.
Outcome criterion_sandwich(const ModelBundle& bundle) {
  CostSpec mx = bundle.costs;
  mx.variant = CostVariant::max;
  const CostCheckReport rep = general_cost_check(bundle.costs, share_space_cost(mx), bundle.costs, 10000, 1010);
  const VanishingDiscountResult add = vanishing_discount(bundle.model, bundle.costs, bundled_grid());
  const VanishingDiscountResult max = vanishing_discount(bundle.model, mx, bundled_grid());
  const double diff = std::abs(max.report.lambda_fixed - add.report.lambda_fixed);
  const bool ok = rep.passed() && diff <= 5e-3;
  return {ok, std::to_string(rep.samples) + " share-space samples, violations lower/upper/subadditive " +
                  std::to_string(rep.lower_violations) + "/" + std::to_string(rep.upper_violations) + "/" +
                  std::to_string(rep.subadditivity_violations) + "; lambda max " + fmt(max.report.lambda_fixed) +
                  " vs additive " + fmt(add.report.lambda_fixed) + ", |diff| " + fmt(diff)};
}

// 11. Byte-identical artifacts from two end-to-end runs.
Outcome criterion_reproducible(const std::string& data_dir, const fs::path& work) {
  const std::vector<std::string> csvs{"policy.csv", "policy_prop.csv", "trajectory.csv", "growth_paths.csv"};
  auto run_once = [&](int threads, std::vector<std::string>& bodies, std::string& err) {
#ifdef _OPENMP
    omp_set_num_threads(threads);
#else
    (void)threads;
#endif
    cli::CommandOptions o;
    o.config_path = data_dir + "/example_config.json";
    o.output_dir = work.string();
    std::ostringstream log;
    if (cli::run_command("optimal", o, log).exit_code != 0) err = log.str();
    o.policy_path = (work / "policy.csv").string();
    if (cli::run_command("simulate", o, log).exit_code != 0) err = log.str();
    bodies.clear();
    for (const auto& f : csvs) bodies.push_back(read_file((work / f).string()));
  };
  std::vector<std::string> first, second;
  std::string err;
  run_once(1, first, err);
  run_once(3, second, err);
#ifdef _OPENMP
  omp_set_num_threads(1);
#endif
  if (!err.empty()) return {false, "command failed: " + err};
  long same = 0;
  std::size_t bytes = 0;
  for (std::size_t k = 0; k < csvs.size(); ++k) {
    same += first[k] == second[k] ? 1 : 0;
    bytes += first[k].size();
  }
  const bool ok = same == static_cast<long>(csvs.size());
  return {ok, std::to_string(same) + "/" + std::to_string(csvs.size()) + " CSV files identical (" +
                  std::to_string(bytes) + " bytes; second run with 3 threads)"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <data_dir> [work_dir]\n", argv[0]);
    return 2;
  }
  const std::string data_dir = argv[1];
  const fs::path work = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "growthopt_acceptance";
  fs::create_directories(work);

  const ModelBundle bundle = load_model(data_dir + "/two_asset.json");
  const ModelBundle iid = load_model(data_dir + "/iid_one_factor.json");

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"e-solver exactness", [] { return criterion_e_solver(); }},
      {"diminution bounds and monotonicity", [] { return criterion_diminution_bounds(); }},
      {"discounted solver oracle and contraction", [&] { return criterion_solver_oracle(bundle); }},
      {"span bound uniform in beta", [&] { return criterion_span(bundle); }},
      {"free-rebalancing growth rate", [&] { return criterion_free_growth(bundle); }},
      {"fixed vs proportional growth rate", [&] { return criterion_cross_check(bundle); }},
      {"closed-loop growth", [&] { return criterion_closed_loop(bundle); }},
      {"large deviations of the growth floor", [&] { return criterion_ld(bundle, iid); }},
      {"pathwise wealth floor", [&] { return criterion_floor(bundle); }},
      {"max-variant cost sandwich", [&] { return criterion_sandwich(bundle); }},
      {"reproducible artifacts", [&] { return criterion_reproducible(data_dir, work / "run"); }},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.passed ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str(), s);
    std::fflush(stdout);
    failed += o.passed ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
