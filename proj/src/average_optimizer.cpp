#include "growthopt/average_optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace growthopt {

double richardson(double beta_prev, double lambda_prev, double beta_last, double lambda_last) {
  const double gap_prev = 1.0 - beta_prev;
  const double gap_last = 1.0 - beta_last;
  if (!(gap_prev > gap_last)) return lambda_last;
  return lambda_last + (lambda_last - lambda_prev) * gap_last / (gap_prev - gap_last);
}

VanishingDiscountResult vanishing_discount(const MarketModel& model, const CostSpec& spec,
                                           const GridSpec& grid,
                                           const VanishingDiscountOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& betas = options.betas;
  if (betas.empty()) throw DomainError("vanishing discount: empty beta schedule");
  for (std::size_t k = 0; k < betas.size(); ++k) {
    if (!(betas[k] > 0.0 && betas[k] < 1.0)) throw DomainError("vanishing discount: betas must lie in (0, 1)");
    if (k > 0 && !(betas[k] > betas[k - 1])) throw DomainError("vanishing discount: betas must be increasing");
  }
  const bool has_fixed = spec.fixed > 0.0;

  VanishingDiscountResult res;
  VanishingDiscountReport& rep = res.report;
  rep.betas = betas;
  Policy previous_policy;
  for (std::size_t k = 0; k < betas.size(); ++k) {
    const double beta = betas[k];
    DiscountedSolution prop;
    DiscountedSolution fixed;
    try {
      prop = solve_discounted(model, spec, grid, beta, ValueVariant::proportional, options.solver);
      fixed = has_fixed ? solve_discounted(model, spec, grid, beta, ValueVariant::fixed_cost, options.solver)
                        : prop;
    } catch (const std::exception& ex) {
      std::ostringstream os;
      os << "discounted solve failed at beta = " << beta << ": " << ex.what();
      throw std::runtime_error(os.str());
    }
    if (!has_fixed) fixed.value.variant = ValueVariant::fixed_cost;

    const double m_beta = prop.value.sup();
    rep.m_beta.push_back(m_beta);
    rep.lambda_estimates.push_back((1.0 - beta) * m_beta);
    rep.sup_fixed.push_back(fixed.value.sup());
    rep.lambda_fixed_estimates.push_back((1.0 - beta) * fixed.value.sup());
    rep.span_prop.push_back(span_seminorm(prop.value));
    double w_lo = std::numeric_limits<double>::infinity();
    double w_hi = -w_lo;
    for (double v : fixed.value.values) {
      w_lo = std::min(w_lo, m_beta - v);
      w_hi = std::max(w_hi, m_beta - v);
    }
    rep.w_beta_extremes.emplace_back(w_lo, w_hi);

    if (k + 1 == betas.size()) {
      if (k > 0) rep.policy_disagreement = fixed.policy.disagreement(previous_policy);
      res.w.resize(fixed.value.values.size());
      for (std::size_t s = 0; s < res.w.size(); ++s) res.w[s] = m_beta - fixed.value.values[s];
      res.policy = std::move(fixed.policy);
      res.policy.tag = "average";
      res.prop_policy = std::move(prop.policy);
      res.value = std::move(fixed.value);
      res.prop_value = std::move(prop.value);
    } else {
      previous_policy = std::move(fixed.policy);
    }
  }

  const std::size_t last = betas.size() - 1;
  rep.lambda = rep.lambda_estimates[last];
  rep.lambda_fixed = rep.lambda_fixed_estimates[last];
  rep.lambda_extrapolated = rep.lambda;
  rep.lambda_fixed_extrapolated = rep.lambda_fixed;
  if (last > 0) {
    rep.lambda_extrapolated =
        richardson(betas[last - 1], rep.lambda_estimates[last - 1], betas[last], rep.lambda);
    rep.lambda_fixed_extrapolated = richardson(betas[last - 1], rep.lambda_fixed_estimates[last - 1],
                                               betas[last], rep.lambda_fixed);
    rep.last_difference = std::abs(rep.lambda - rep.lambda_estimates[last - 1]);
  }

  std::ostringstream diag;
  bool finite = true;
  for (double l : rep.lambda_estimates) finite = finite && std::isfinite(l);
  for (double l : rep.lambda_fixed_estimates) finite = finite && std::isfinite(l);
  const bool w_nonneg = std::all_of(rep.w_beta_extremes.begin(), rep.w_beta_extremes.end(),
                                    [](const auto& p) { return p.first >= -1e-9; });
  rep.converged = finite && w_nonneg;
  diag << "estimates finite: " << (finite ? "yes" : "no") << "; w_beta >= 0: " << (w_nonneg ? "yes" : "no")
       << "; |last - second-last| = " << rep.last_difference
       << "; policy change at the two largest betas: " << rep.policy_disagreement;
  rep.diagnostics = diag.str();
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

ResidualReport bellman_residual(const DiscountedProblem& problem, const Policy& policy,
                                std::span<const double> w, double lambda, double grid_tol) {
  const StateGrid& g = problem.grid();
  if (policy.target.size() != problem.size() || w.size() != problem.size())
    throw DomainError("bellman_residual: policy, relative value and problem grid sizes differ");
  std::vector<double> ew(problem.size());
  problem.expectation(w, ew);

  ResidualReport rep;
  rep.grid_tol = grid_tol;
  rep.min_slack = std::numeric_limits<double>::infinity();
  rep.max_slack = -rep.min_slack;
  double total = 0.0;
  const int n = g.n_nodes();
  for (int z = 0; z < g.n_factors; ++z)
    for (int j = 0; j < g.n_wealth(); ++j)
      for (int a = 0; a < n; ++a) {
        const std::size_t s = g.index(a, j, z);
        const int b = policy.target[s];
        double reward;
        double next;
        if (!policy.impulse[s] || b == a) {
          reward = problem.h(a, z);
          next = ew[s];
        } else {
          const double le = problem.log_e(a, b, j);
          if (le == kInfeasible) throw DomainError("bellman_residual: policy selects an infeasible target");
          const auto [j0, wx] = problem.trade_stencil(a, b, j);
          reward = le + problem.h(b, z);
          next = ew[g.index(b, j0, z)];
          if (wx > 0.0) next = (1.0 - wx) * next + wx * ew[g.index(b, j0 + 1, z)];
        }
        const double slack = reward - next + w[s] - lambda;
        total += slack;
        if (slack < rep.min_slack) {
          rep.min_slack = slack;
          rep.argmin = s;
        }
        rep.max_slack = std::max(rep.max_slack, slack);
      }
  rep.mean_slack = total / static_cast<double>(problem.size());
  rep.passed = rep.min_slack >= -grid_tol;
  return rep;
}

CrossCheckReport cross_check_costs(const MarketModel& model, const CostSpec& spec,
                                   const GridSpec& grid, const VanishingDiscountOptions& options,
                                   double cross_tol) {
  const VanishingDiscountResult with_fixed = vanishing_discount(model, spec, grid, options);
  const VanishingDiscountResult without = vanishing_discount(model, spec.proportional_only(), grid, options);
  CrossCheckReport rep;
  rep.lambda_fixed = with_fixed.report.lambda_fixed;
  rep.lambda_prop = without.report.lambda_fixed;
  rep.difference = std::abs(rep.lambda_fixed - rep.lambda_prop);
  rep.cross_tol = cross_tol;
  rep.passed = rep.difference <= cross_tol;
  return rep;
}

MimickingPolicy build_mimicking(const Policy& base, const CostConstants& constants) {
  if (!base.wealth_free())
    throw DomainError("mimicking policy: base policy must not depend on wealth (use the proportional-cost policy)");
  if (constants.M_star < constants.M) throw DomainError("mimicking policy: M* must not be below M");
  MimickingPolicy mp;
  mp.base = base;
  mp.M = constants.M;
  mp.M_star = constants.M_star;
  return mp;
}

}  // namespace growthopt
