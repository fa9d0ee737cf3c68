#include "growthopt/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include "growthopt/average_optimizer.hpp"
#include "growthopt/cost_engine.hpp"
#include "growthopt/dp_solver.hpp"
#include "growthopt/market_model.hpp"
#include "growthopt/rng.hpp"
#include "growthopt/simulator.hpp"
#include "growthopt/value_io.hpp"

namespace growthopt {

namespace {

constexpr double kRound = 1e-12;

// Random simplex point; a third of the draws sit on a face so that
// zero coordinates and vertices are exercised.
std::vector<double> random_simplex(Rng& rng, int d) {
  std::vector<double> p(d);
  const double u = rng.uniform();
  if (u < 0.1) {
    p[static_cast<int>(rng.uniform() * d) % d] = 1.0;
    return p;
  }
  double total = 0.0;
  for (int i = 0; i < d; ++i) {
    const bool zero = u < 0.33 && rng.uniform() < 0.5;
    p[i] = zero ? 0.0 : -std::log(1.0 - rng.uniform());
    total += p[i];
  }
  if (total == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (double& x : p) x /= total;
  return p;
}

class Recorder {
 public:
  explicit Recorder(std::vector<CheckResult>& out) : out_(out) {}
  void add(const std::string& suite, const std::string& name, bool ok, const std::string& detail) {
    out_.push_back({suite, name, ok, detail});
  }
  template <class F>
  void guarded(const std::string& suite, const std::string& name, F&& body) {
    try {
      body();
    } catch (const std::exception& ex) {
      add(suite, name, false, std::string("error: ") + ex.what());
    }
  }

 private:
  std::vector<CheckResult>& out_;
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

void market_suite(Recorder& rec, const MarketModel& model, const SimplexMesh& mesh, Rng& rng) {
  rec.guarded("market_model", "validate", [&] {
    const ValidationReport r = validate(model);
    std::string detail = "kappa_" + std::to_string(r.dobrushin_n) + " = " + fmt(r.kappa);
    for (const auto& v : r.violations) detail += "; " + v;
    rec.add("market_model", "validate", r.ok, detail);
  });
  rec.guarded("market_model", "invariant measure residual", [&] {
    const auto theta = invariant_measure(model);
    double res = 0.0;
    for (int j = 0; j < model.n_factors(); ++j) {
      double s = 0.0;
      for (int i = 0; i < model.n_factors(); ++i) s += theta[i] * model.transition(i, j);
      res = std::max(res, std::abs(s - theta[j]));
    }
    rec.add("market_model", "invariant measure residual", res <= 1e-10, "residual " + fmt(res));
  });
  rec.guarded("market_model", "dobrushin submultiplicative", [&] {
    std::vector<double> kappa(17);
    for (int n = 1; n <= 16; ++n) kappa[n] = dobrushin(model, n);
    long bad = 0;
    for (int n = 1; n <= 8; ++n)
      for (int m = 1; m <= 8; ++m)
        if (kappa[n + m] > kappa[n] * kappa[m] + kRound) ++bad;
    rec.add("market_model", "dobrushin submultiplicative", bad == 0, std::to_string(bad) + " violations");
  });
  rec.guarded("market_model", "h bounds and concavity", [&] {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int z = 0; z < model.n_factors(); ++z)
      for (int xi = 0; xi < model.n_shocks(); ++xi)
        for (double r : model.returns(z, xi)) {
          lo = std::min(lo, std::log(r));
          hi = std::max(hi, std::log(r));
        }
    long bad = 0;
    for (int z = 0; z < model.n_factors(); ++z) {
      for (int a = 0; a < mesh.size(); ++a) {
        const double h = expected_log_return(model, mesh.node(a), z);
        if (h < lo - kRound || h > hi + kRound) ++bad;
      }
      for (int k = 0; k < 200; ++k) {
        const auto p = random_simplex(rng, model.n_assets());
        const auto q = random_simplex(rng, model.n_assets());
        std::vector<double> mid(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) mid[i] = 0.5 * (p[i] + q[i]);
        const double lhs = expected_log_return(model, mid, z);
        const double rhs = 0.5 * (expected_log_return(model, p, z) + expected_log_return(model, q, z));
        if (lhs < rhs - kRound) ++bad;
      }
    }
    rec.add("market_model", "h bounds and concavity", bad == 0, std::to_string(bad) + " violations");
  });
}

void cost_suite(Recorder& rec, const MarketModel& model, const CostSpec& spec, long samples, Rng& rng) {
  const int d = spec.n_assets();
  const double c_hat = spec.max_rate();
  const double one_minus_sell = 1.0 - spec.max_sell_rate();
  const double x_star = affordability_threshold(spec);
  const GrowthFloor gf = growth_floor(model);
  std::optional<CostConstants> k;
  rec.guarded("cost_engine", "constants", [&] {
    k = cost_constants(spec, gf.p_hat);
    const bool ok = std::abs(std::exp(-k->eta) - (1.0 - 2.0 * c_hat / (1.0 - c_hat))) <= kRound &&
                    std::abs(k->M_star - k->M * std::exp(k->eta_M)) <= kRound * std::max(1.0, k->M_star) &&
                    (spec.fixed == 0.0 || k->eta_M > k->eta);
    rec.add("cost_engine", "constants", ok,
            "eta = " + fmt(k->eta) + ", p_hat = " + fmt(gf.p_hat) + ", x* = " + fmt(k->x_star) +
                ", M = " + fmt(k->M) + ", eta_M = " + fmt(k->eta_M));
  });
  const double inf_e_M = (k && spec.fixed > 0.0) ? min_diminution(spec, k->M) : 1.0;

  long solver_bad = 0, dichotomy_bad = 0, root_bad = 0, l4 = 0, l5i = 0, l5ii = 0, l5iii = 0, sub = 0;
  double worst_diff = 0.0;
  for (long s = 0; s < samples; ++s) {
    const auto pm = random_simplex(rng, d);
    const auto p = random_simplex(rng, d);
    const auto p3 = random_simplex(rng, d);
    const double x = spec.fixed > 0.0 ? std::max(x_star, spec.fixed) * std::exp(8.0 * rng.uniform() - 1.0)
                                      : std::exp(6.0 * rng.uniform());
    const double e = solve_e(spec, pm, p, x);
    const double eb = solve_e_bisect(spec, pm, p, x);
    const double et = solve_e_prop(spec, pm, p);
    worst_diff = std::max(worst_diff, std::abs(e - eb));
    if (std::abs(e - eb) > 1e-10) ++solver_bad;
    if ((e == 0.0) != (budget_function(spec, pm, p, x, 0.0) >= 1.0)) ++dichotomy_bad;
    if (e > 0.0 && std::abs(budget_function(spec, pm, p, x, e) - 1.0) > kRound) ++root_bad;
    if (1.0 - et > 2.0 * c_hat / (1.0 - c_hat) + kRound) ++l4;
    if (1.0 - e > (2.0 * c_hat + spec.fixed / x) / (1.0 - c_hat) + kRound) ++l4;
    const double x2 = x * (1.0 + 10.0 * rng.uniform());
    const double e2 = solve_e(spec, pm, p, x2);
    if (e > e2 + kRound || e2 > et + kRound) ++l5i;
    if (x > x_star && et - e > spec.fixed / (one_minus_sell * x) + kRound) ++l5ii;
    if (k && spec.fixed > 0.0 && x >= k->M && e > 0.0 &&
        std::log(et / e) > spec.fixed / (one_minus_sell * x) / inf_e_M + kRound)
      ++l5iii;
    if (proportional_cost(spec, pm, p3) >
        proportional_cost(spec, pm, p) + proportional_cost(spec, p, p3) + kRound)
      ++sub;
  }
  const std::string n = " of " + std::to_string(samples);
  rec.add("cost_engine", "exact solver matches bisection", solver_bad == 0,
          std::to_string(solver_bad) + n + " differ by > 1e-10; worst " + fmt(worst_diff));
  rec.add("cost_engine", "root/no-root dichotomy", dichotomy_bad == 0, std::to_string(dichotomy_bad) + n);
  rec.add("cost_engine", "F(e) = 1 at positive roots", root_bad == 0, std::to_string(root_bad) + n);
  rec.add("cost_engine", "diminution lower bounds", l4 == 0, std::to_string(l4) + " violations");
  rec.add("cost_engine", "monotone in wealth, e <= e~", l5i == 0, std::to_string(l5i) + " violations");
  rec.add("cost_engine", "gap e~ - e bound", l5ii == 0, std::to_string(l5ii) + " violations");
  rec.add("cost_engine", "log-ratio bound above M", l5iii == 0, std::to_string(l5iii) + " violations");
  rec.add("cost_engine", "proportional cost subadditive", sub == 0, std::to_string(sub) + " violations");

  rec.guarded("cost_engine", "cost sandwich", [&] {
    CostSpec additive = spec;
    additive.variant = CostVariant::additive;
    CostSpec max_variant = spec;
    max_variant.variant = CostVariant::max;
    const CostCheckReport self = general_cost_check(additive, share_space_cost(additive), additive);
    const CostCheckReport mx = general_cost_check(additive, share_space_cost(max_variant), additive);
    rec.add("cost_engine", "cost sandwich", self.passed() && mx.passed(),
            "additive: " + std::to_string(self.lower_violations + self.upper_violations +
                                          self.subadditivity_violations) +
                " violations, max variant: " +
                std::to_string(mx.lower_violations + mx.upper_violations + mx.subadditivity_violations));
  });
}

}  // namespace

std::vector<CheckResult> verify_all(const ModelBundle& bundle, const RunConfig& cfg, const VerifyOptions& options) {
  std::vector<CheckResult> out;
  Recorder rec(out);
  Rng rng(options.seed);
  const MarketModel& model = bundle.model;
  const CostSpec& spec = bundle.costs;
  const SimplexMesh mesh(model.n_assets(), cfg.grid.simplex_order);

  market_suite(rec, model, mesh, rng);
  cost_suite(rec, model, spec, options.samples, rng);

  const double beta0 = cfg.betas.front();
  rec.guarded("dp_solver", "contraction", [&] {
    const DiscountedProblem problem(model, spec, cfg.grid, beta0, ValueVariant::fixed_cost, cfg.solver);
    const std::size_t n = problem.size();
    std::vector<double> v(n), w(n), tv(n), tw(n);
    long bad = 0;
    double worst = 0.0;
    for (int k = 0; k < options.contraction_pairs; ++k) {
      for (std::size_t s = 0; s < n; ++s) {
        v[s] = 20.0 * (rng.uniform() - 0.5);
        w[s] = 20.0 * (rng.uniform() - 0.5);
      }
      problem.bellman(v, tv);
      problem.bellman(w, tw);
      double dv = 0.0, dt = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        dv = std::max(dv, std::abs(v[s] - w[s]));
        dt = std::max(dt, std::abs(tv[s] - tw[s]));
      }
      worst = std::max(worst, dt / dv);
      if (dt > beta0 * dv + kRound * (1.0 + dv)) ++bad;
    }
    rec.add("dp_solver", "contraction", bad == 0, "worst ratio " + fmt(worst) + " vs beta " + fmt(beta0));
  });

  std::optional<VanishingDiscountResult> vd;
  rec.guarded("average_optimizer", "vanishing discount", [&] {
    VanishingDiscountOptions vo;
    vo.betas = cfg.betas;
    vo.solver = cfg.solver;
    vd = vanishing_discount(model, spec, cfg.grid, vo);
    rec.add("average_optimizer", "vanishing discount", vd->report.converged, vd->report.diagnostics);
  });
  if (vd) {
    const VanishingDiscountReport& r = vd->report;
    rec.guarded("dp_solver", "wealth monotone", [&] {
      rec.add("dp_solver", "wealth monotone", wealth_monotone(vd->value), "largest beta");
    });
    rec.guarded("dp_solver", "value gap", [&] {
      const ValueGapReport g = value_gap_check(vd->value, vd->prop_value);
      rec.add("dp_solver", "value gap", g.nonnegative && g.monotone,
              "gap in [" + fmt(g.min_gap) + ", " + fmt(g.max_gap) + "]");
    });
    rec.guarded("dp_solver", "policy targets feasible", [&] {
      const DiscountedProblem problem(model, spec, cfg.grid, cfg.betas.back(), ValueVariant::fixed_cost, cfg.solver);
      const StateGrid& g = problem.grid();
      long bad = 0;
      for (int z = 0; z < g.n_factors; ++z)
        for (int j = 0; j < g.n_wealth(); ++j)
          for (int a = 0; a < g.n_nodes(); ++a) {
            const std::size_t s = g.index(a, j, z);
            const int b = vd->policy.target[s];
            if (vd->policy.impulse[s] ? problem.log_e(a, b, j) == kInfeasible : b != a) ++bad;
          }
      rec.add("dp_solver", "policy targets feasible", bad == 0, std::to_string(bad) + " bad states");
    });
    rec.guarded("dp_solver", "one transaction suffices", [&] {
      const DiscountedProblem problem(model, spec, cfg.grid, cfg.betas.back(), ValueVariant::proportional, cfg.solver);
      const StateGrid& g = problem.grid();
      const auto& v = vd->prop_value.values;
      std::vector<double> mv(v.size());
      for (int z = 0; z < g.n_factors; ++z)
        for (int a = 0; a < g.n_nodes(); ++a) mv[g.index(a, 0, z)] = problem.impulse(v, a, 1.0, z).value;
      double worst = -std::numeric_limits<double>::infinity();
      for (int z = 0; z < g.n_factors; ++z)
        for (int a = 0; a < g.n_nodes(); ++a)
          worst = std::max(worst, problem.impulse(mv, a, 1.0, z).value - mv[g.index(a, 0, z)]);
      rec.add("dp_solver", "one transaction suffices", worst <= cfg.solver.tie_eps,
              "max M(Mv) - Mv = " + fmt(worst));
    });
    rec.guarded("dp_solver", "span bound", [&] {
      const double bound = span_bound(model, spec, mesh);
      const double worst = *std::max_element(r.span_prop.begin(), r.span_prop.end());
      rec.add("dp_solver", "span bound", worst <= bound, "max span " + fmt(worst) + " <= bound " + fmt(bound));
    });
    rec.guarded("average_optimizer", "growth estimates bounded", [&] {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int z = 0; z < model.n_factors(); ++z)
        for (int xi = 0; xi < model.n_shocks(); ++xi)
          for (double x : model.returns(z, xi)) {
            lo = std::min(lo, std::log(x));
            hi = std::max(hi, std::log(x));
          }
      bool ok = true;
      for (double l : r.lambda_estimates) ok = ok && l >= lo - 1e-9 && l <= hi + 1e-9;
      for (double l : r.lambda_fixed_estimates) ok = ok && l >= lo - 1e-9 && l <= hi + 1e-9;
      rec.add("average_optimizer", "growth estimates bounded", ok,
              "lambda = " + fmt(r.lambda) + " in [" + fmt(lo) + ", " + fmt(hi) + "]");
    });
    rec.guarded("average_optimizer", "Bellman inequality", [&] {
      const DiscountedProblem problem(model, spec, cfg.grid, cfg.betas.back(), ValueVariant::fixed_cost, cfg.solver);
      const ResidualReport res = bellman_residual(problem, vd->policy, vd->w, r.lambda, cfg.grid_tol);
      rec.add("average_optimizer", "Bellman inequality", res.passed,
              "min slack " + fmt(res.min_slack) + ", mean " + fmt(res.mean_slack));
    });
    rec.add("average_optimizer", "fixed vs proportional growth",
            std::abs(r.lambda_fixed - r.lambda) <= cfg.cross_tol,
            "|" + fmt(r.lambda_fixed) + " - " + fmt(r.lambda) + "| vs " + fmt(cfg.cross_tol));
  }

  // Pathwise checks.
  std::vector<double> pi0 = cfg.simulation.pi0;
  if (pi0.empty()) {
    pi0.assign(model.n_assets(), 0.0);
    pi0[0] = 1.0;
  }
  rec.guarded("simulator", "wealth floor (proportional costs)", [&] {
    const CostSpec prop = spec.proportional_only();
    const double eta = eta_of(prop.max_rate());
    std::unique_ptr<Strategy> strat;
    if (vd)
      strat = std::make_unique<GridPolicyStrategy>(vd->prop_policy);
    else
      strat = std::make_unique<ConstantRebalance>(std::vector<double>(model.n_assets(), 1.0 / model.n_assets()));
    long bad = 0;
    for (long k = 0; k < options.sim_paths; ++k) {
      const Trajectory tr = run(model, prop, *strat, pi0, cfg.simulation.x0, cfg.simulation.z0, options.sim_T,
                                derive_seed(options.seed, k));
      bad += wealth_floor_check(tr, model, eta).violations;
    }
    rec.add("simulator", "wealth floor (proportional costs)", bad == 0, std::to_string(bad) + " violations");
  });
  if (vd && spec.fixed > 0.0) {
    rec.guarded("simulator", "wealth floor (mimicking)", [&] {
      const CostConstants k = cost_constants(spec, growth_floor(model).p_hat);
      MimickingStrategy strat(build_mimicking(vd->prop_policy, k));
      long bad = 0;
      for (long j = 0; j < options.sim_paths; ++j) {
        const Trajectory tr = run(model, spec, strat, pi0, std::max(cfg.simulation.x0, k.M_star),
                                  cfg.simulation.z0, options.sim_T, derive_seed(options.seed + 1, j));
        bad += wealth_floor_check(tr, model, k.eta_M).violations;
      }
      rec.add("simulator", "wealth floor (mimicking)", bad == 0, std::to_string(bad) + " violations");
    });
  }
  if (vd) {
    rec.guarded("simulator", "self-financing in share space", [&] {
      GridPolicyStrategy strat(vd->policy);
      double worst = 0.0;
      long trades = 0;
      std::vector<double> s0(model.n_assets(), 1.0);
      for (long k = 0; k < std::min<long>(options.sim_paths, 10); ++k) {
        const Trajectory tr = run(model, spec, strat, pi0, cfg.simulation.x0, cfg.simulation.z0, options.sim_T,
                                  derive_seed(options.seed + 2, k));
        const ShareHoldings sh = to_share_holdings(tr, model, spec, s0);
        worst = std::max(worst, sh.max_relative_residual);
        trades += sh.transactions_checked;
      }
      rec.add("simulator", "self-financing in share space", true,
              std::to_string(trades) + " trades, worst residual " + fmt(worst));
    });
    rec.guarded("simulator", "reproducible", [&] {
      GridPolicyStrategy a(vd->policy), b(vd->policy);
      const Trajectory ta = run(model, spec, a, pi0, cfg.simulation.x0, cfg.simulation.z0, options.sim_T, 99);
      const Trajectory tb = run(model, spec, b, pi0, cfg.simulation.x0, cfg.simulation.z0, options.sim_T, 99);
      rec.add("simulator", "reproducible", trajectory_csv(ta) == trajectory_csv(tb), "same seed, same bytes");
    });
  }
  return out;
}

}  // namespace growthopt
