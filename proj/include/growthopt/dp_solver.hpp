#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "growthopt/cost_engine.hpp"
#include "growthopt/market_model.hpp"
#include "growthopt/simplex_grid.hpp"

namespace growthopt {

/// Marker for "no feasible transaction" (ln 0).
inline constexpr double kInfeasible = -1e18;

struct SolverOptions {
  double tol = 1e-8;        // sup-norm accuracy of the returned value on the grid model
  double tie_eps = 1e-10;   // a transaction must beat holding by more than this
  long max_iterations = 5'000'000;
};

enum class ValueVariant {
  fixed_cost,    // v_beta on simplex x wealth x factor
  proportional,  // v~_beta, fixed cost dropped, no wealth axis
};

std::string to_string(ValueVariant v);

struct ValueFunction {
  StateGrid grid;
  double beta = 0.0;
  ValueVariant variant = ValueVariant::fixed_cost;
  std::vector<double> values;

  double at(int node, int j, int z) const { return values[grid.index(node, j, z)]; }
  double sup() const;
  double inf() const;
};

/// Impulse region and target selector on the grid. target == node wherever
/// impulse is false.
struct Policy {
  StateGrid grid;
  std::vector<std::uint8_t> impulse;
  std::vector<int> target;
  double beta = 0.0;
  std::string tag;  // "beta=<b>" or "average"

  bool wealth_free() const noexcept { return grid.wealth.trivial(); }
  /// Fraction of states on which two policies on the same grid disagree.
  double disagreement(const Policy& other) const;
};

struct IterationReport {
  long warmup_iterations = 0;
  long iterations = 0;
  double final_delta = 0.0;
  double error_bound = 0.0;  // beta / (1 - beta) * final_delta
  bool converged = false;
  double seconds = 0.0;
};

struct ImpulseResult {
  double value = kInfeasible;
  int target = -1;  // -1 when every target is infeasible
};

/// One discounted problem on a fixed grid with all transition stencils and
/// transaction factors precomputed.
///
/// State (a, j, z): pre-transaction proportions at mesh node a, wealth x_j,
/// factor z. The Bellman operator is
///   Tv = max( W(a, j, z), max_{b != a} ln e(a, b, x_j) + W(b, x_j e, z) ),
///   W(b, j, z) = h(b, z) + beta sum_{z', xi} P(z, z') nu(xi) v(b <> zeta, x_j (b . zeta), z'),
/// where off-grid arguments are interpolated (simplex stencil, linear in
/// log-wealth with clamping at the mesh ends).
class DiscountedProblem {
 public:
  DiscountedProblem(const MarketModel& model, const CostSpec& spec, const GridSpec& grid_spec,
                    double beta, ValueVariant variant, SolverOptions options = {});

  const StateGrid& grid() const noexcept { return grid_; }
  double beta() const noexcept { return beta_; }
  ValueVariant variant() const noexcept { return variant_; }
  const CostSpec& costs() const noexcept { return spec_; }
  const SolverOptions& options() const noexcept { return options_; }
  std::size_t size() const noexcept { return grid_.size(); }

  double h(int node, int z) const { return h_[static_cast<std::size_t>(z) * grid_.n_nodes() + node]; }
  double h_span() const;
  double h_sup_abs() const;

  /// E v(next state) when holding mesh node a at wealth x_j in factor z,
  /// for every grid state (no reward, no discount).
  void expectation(std::span<const double> v, std::span<double> out) const;
  /// W = h + beta * E v for every grid state.
  void continuation(std::span<const double> v, std::span<double> w) const;
  /// No-transaction branch only.
  void hold_step(std::span<const double> v, std::span<double> out) const;
  /// Full Bellman operator; optionally records the greedy policy.
  void bellman(std::span<const double> v, std::span<double> out, std::uint8_t* impulse = nullptr,
               int* target = nullptr) const;

  /// Impulse operator Mv at an arbitrary wealth level: max over all mesh
  /// nodes b (including the current one) of ln e(a, b, x) + v(b, x e, z).
  ImpulseResult impulse(std::span<const double> v, int node, double x, int z) const;

  /// v at (mesh node, wealth x, z), linear in log-wealth.
  double value_at(std::span<const double> v, int node, double x, int z) const;
  /// v at an arbitrary simplex point.
  double value_at(std::span<const double> v, std::span<const double> pi, double x, int z) const;

  /// Wealth at grid index j (1 when there is no wealth axis).
  double wealth(int j) const { return grid_.wealth.x(j); }

  /// ln e(a, b, x_j), kInfeasible when e = 0.
  double log_e(int a, int b, int j) const {
    return trade_log_e_[(static_cast<std::size_t>(j) * n_ + a) * n_ + b];
  }
  /// Linear stencil (j0, w) of the post-trade wealth x_j e(a, b, x_j).
  std::pair<int, double> trade_stencil(int a, int b, int j) const {
    const std::size_t idx = (static_cast<std::size_t>(j) * n_ + a) * n_ + b;
    return {trade_j0_[idx], trade_w_[idx]};
  }

 private:
  struct Sparse {
    std::vector<std::uint32_t> start;
    std::vector<std::uint32_t> col;
    std::vector<double> w;
  };

  StateGrid grid_;
  CostSpec spec_;
  double beta_;
  ValueVariant variant_;
  SolverOptions options_;
  int n_ = 0;   // mesh nodes
  int nx_ = 1;  // wealth nodes
  int nz_ = 1;
  std::vector<double> transition_;
  std::vector<double> h_;  // [z][node]
  // Expected next value given (node, j) and next factor z': row (node, j),
  // columns index the (node', j') slice of v at factor z'.
  std::vector<Sparse> drift_;  // one per z'
  std::vector<double> trade_log_e_;  // [j][a][b]
  std::vector<int> trade_j0_;
  std::vector<double> trade_w_;
};

struct DiscountedSolution {
  ValueFunction value;
  Policy policy;
  IterationReport report;
};

/// Value iteration from the no-transaction value; stops once
/// ||v^{k+1} - v^k|| <= tol (1 - beta) / beta. Throws std::runtime_error
/// with diagnostics when the iteration cap is hit.
DiscountedSolution solve_discounted(const DiscountedProblem& problem);

DiscountedSolution solve_discounted(const MarketModel& model, const CostSpec& spec,
                                    const GridSpec& grid, double beta,
                                    ValueVariant variant = ValueVariant::fixed_cost,
                                    SolverOptions options = {});

/// sup v - inf v over the grid.
double span_seminorm(const ValueFunction& v);

/// Explicit bound on span(v~_beta) valid for every beta:
/// min over n <= n_max with kappa_n < 1 of (n ||h||_sp - (n + 2) ln e_) / (1 - kappa_n),
/// with e_ = inf e~ and ||h||_sp taken over mesh nodes.
double span_bound(const MarketModel& model, const CostSpec& spec, const SimplexMesh& mesh,
                  int n_max = kDefaultDobrushinHorizon);

/// True when v is nondecreasing along the wealth axis at every (node, z),
/// up to `tol`.
bool wealth_monotone(const ValueFunction& v, double tol = 1e-12);

struct ValueGapReport {
  bool nonnegative = true;  // v~ >= v everywhere (up to tol)
  bool monotone = true;     // gap nonincreasing in wealth
  double min_gap = 0.0;
  double max_gap = 0.0;
  std::vector<double> max_gap_per_wealth;
};

ValueGapReport value_gap_check(const ValueFunction& fixed, const ValueFunction& prop,
                               double tol = 1e-9);

}  // namespace growthopt
