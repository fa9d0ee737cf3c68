#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "growthopt/cost_engine.hpp"
#include "growthopt/dp_solver.hpp"
#include "growthopt/market_model.hpp"

namespace growthopt {

struct VanishingDiscountOptions {
  std::vector<double> betas{0.9, 0.99, 0.995, 0.999};
  SolverOptions solver{};
};

/// Results of the beta sweep. Estimates with the `fixed` suffix come from the
/// problem with the fixed cost; the others from the proportional-only problem.
struct VanishingDiscountReport {
  std::vector<double> betas;
  std::vector<double> m_beta;            // sup v~_beta
  std::vector<double> lambda_estimates;  // (1 - beta) m_beta
  std::vector<double> sup_fixed;         // sup v_beta
  std::vector<double> lambda_fixed_estimates;
  std::vector<std::pair<double, double>> w_beta_extremes;  // min/max of m_beta - v_beta
  std::vector<double> span_prop;                            // span of v~_beta
  double lambda = 0.0;                 // last proportional estimate
  double lambda_extrapolated = 0.0;    // two-point Richardson in (1 - beta)
  double lambda_fixed = 0.0;
  double lambda_fixed_extrapolated = 0.0;
  double last_difference = 0.0;        // |last - second-last| proportional estimates
  double policy_disagreement = 0.0;    // fixed-cost policies at the two largest betas
  double seconds = 0.0;
  bool converged = false;
  std::string diagnostics;
};

struct VanishingDiscountResult {
  VanishingDiscountReport report;
  Policy policy;          // greedy fixed-cost policy at the largest beta, tag "average"
  Policy prop_policy;     // greedy proportional policy at the largest beta
  ValueFunction value;    // v_beta at the largest beta
  ValueFunction prop_value;
  std::vector<double> w;  // m_beta - v_beta at the largest beta
};

/// Solves the discounted problems for every beta (with and without the fixed
/// cost) and extracts the average-reward quantities. Betas must be strictly
/// increasing in (0, 1).
VanishingDiscountResult vanishing_discount(const MarketModel& model, const CostSpec& spec,
                                           const GridSpec& grid,
                                           const VanishingDiscountOptions& options = {});

/// Two-point extrapolation to beta = 1 of estimates linear in (1 - beta).
double richardson(double beta_prev, double lambda_prev, double beta_last, double lambda_last);

struct ResidualReport {
  double min_slack = 0.0;
  double mean_slack = 0.0;
  double max_slack = 0.0;
  std::size_t argmin = 0;
  double grid_tol = 0.0;
  bool passed = false;
  /// Which inequality the numbers satisfy.
  std::string form = "eta(s, f(s)) - E[w(next)] + w(s) - lambda >= 0, w = m_beta - v_beta >= 0";
};

/// Average-reward Bellman inequality for a policy and relative value w on the
/// grid of `problem`:
///   slack(s) = eta(s, f(s)) - sum w(s') q(s, f(s))(s') + w(s) - lambda,
/// eta the one-step reward (log cost factor plus h of the held portfolio).
/// Passes when min slack >= -grid_tol.
ResidualReport bellman_residual(const DiscountedProblem& problem, const Policy& policy,
                                std::span<const double> w, double lambda, double grid_tol = 1e-2);

struct CrossCheckReport {
  double lambda_fixed = 0.0;  // from the run with the fixed cost
  double lambda_prop = 0.0;   // from the run with the fixed cost removed
  double difference = 0.0;
  double cross_tol = 0.0;
  bool passed = false;
};

/// Runs the vanishing-discount sweep for `spec` and for `spec` without its
/// fixed cost and compares the growth rates.
CrossCheckReport cross_check_costs(const MarketModel& model, const CostSpec& spec,
                                   const GridSpec& grid, const VanishingDiscountOptions& options = {},
                                   double cross_tol = 5e-3);

/// Proportional-cost policy plus the thresholds of the mimicking strategy.
struct MimickingPolicy {
  Policy base;
  double M = 0.0;
  double M_star = 0.0;
};

/// Throws DomainError when the base policy depends on wealth.
MimickingPolicy build_mimicking(const Policy& base, const CostConstants& constants);

}  // namespace growthopt
