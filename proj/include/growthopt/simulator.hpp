#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "growthopt/average_optimizer.hpp"
#include "growthopt/cost_engine.hpp"
#include "growthopt/dp_solver.hpp"
#include "growthopt/market_model.hpp"

namespace growthopt {

struct Decision {
  bool transact = false;
  std::vector<double> target;  // used only when transact is true
};

/// Trading rule consulted once per period before trading.
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual Decision decide(std::span<const double> pi_minus, double x_minus, int z, long t) = 0;
  /// Called after the period's trade with the return vector that follows it.
  virtual void observe(std::span<const double> /*zeta*/) {}
  /// Forget any path-dependent state.
  virtual void reset() {}
  virtual std::unique_ptr<Strategy> clone() const = 0;
  virtual std::string name() const = 0;
};

class NoTransaction final : public Strategy {
 public:
  Decision decide(std::span<const double>, double, int, long) override { return {}; }
  std::unique_ptr<Strategy> clone() const override { return std::make_unique<NoTransaction>(); }
  std::string name() const override { return "no_transaction"; }
};

/// Rebalances to fixed proportions every `period` steps.
class ConstantRebalance final : public Strategy {
 public:
  explicit ConstantRebalance(std::vector<double> target, long period = 1);
  Decision decide(std::span<const double> pi_minus, double x_minus, int z, long t) override;
  std::unique_ptr<Strategy> clone() const override { return std::make_unique<ConstantRebalance>(*this); }
  std::string name() const override { return "constant_rebalance"; }

 private:
  std::vector<double> target_;
  long period_;
};

/// Grid policy evaluated at the nearest mesh node and nearest wealth node.
class GridPolicyStrategy final : public Strategy {
 public:
  explicit GridPolicyStrategy(Policy policy);
  Decision decide(std::span<const double> pi_minus, double x_minus, int z, long t) override;
  std::unique_ptr<Strategy> clone() const override { return std::make_unique<GridPolicyStrategy>(*this); }
  std::string name() const override { return "grid_policy"; }
  const Policy& policy() const noexcept { return policy_; }

 private:
  Policy policy_;
};

/// Follows a wealth-free base policy while wealth stays at or above M, stops
/// trading below M, and re-synchronises with the base strategy's proportions
/// once wealth reaches M*. The base strategy is tracked as a shadow portfolio
/// so that the re-sync target is the one it would hold at that moment.
class MimickingStrategy final : public Strategy {
 public:
  explicit MimickingStrategy(MimickingPolicy policy);
  Decision decide(std::span<const double> pi_minus, double x_minus, int z, long t) override;
  void observe(std::span<const double> zeta) override;
  void reset() override;
  std::unique_ptr<Strategy> clone() const override { return std::make_unique<MimickingStrategy>(*this); }
  std::string name() const override { return "mimicking"; }
  bool recovering() const noexcept { return recovering_; }

 private:
  MimickingPolicy policy_;
  GridPolicyStrategy base_;
  bool recovering_ = false;
  std::vector<double> shadow_minus_;
  std::vector<double> shadow_;
};

/// Simulated path in struct-of-arrays form. Index t runs over decision
/// periods 0..steps-1; the state after the last period is in final_*.
struct Trajectory {
  int n_assets = 0;
  long steps = 0;
  std::vector<int> z;               // factor at t
  std::vector<int> xi;              // shock that arrived at t (-1 at t = 0)
  std::vector<double> pi_minus;     // steps x n_assets
  std::vector<double> pi;           // steps x n_assets
  std::vector<std::uint8_t> transacted;
  std::vector<double> e;            // diminution factor applied (1 when no trade)
  std::vector<double> log_x_minus;
  std::vector<double> log_x;        // -inf after annihilation
  int final_z = 0;
  int final_xi = -1;
  std::vector<double> final_pi_minus;
  double final_log_x_minus = 0.0;
  bool annihilated = false;
  std::uint64_t seed = 0;
  std::uint64_t model_hash = 0;

  std::span<const double> pi_minus_at(long t) const {
    return {pi_minus.data() + t * n_assets, static_cast<std::size_t>(n_assets)};
  }
  std::span<const double> pi_at(long t) const {
    return {pi.data() + t * n_assets, static_cast<std::size_t>(n_assets)};
  }
  /// ln X_-(t) for t = 0..steps (t = steps is the final state).
  double log_wealth_minus(long t) const { return t < steps ? log_x_minus[t] : final_log_x_minus; }
  /// (z, xi) at t = 1..steps.
  int factor(long t) const { return t < steps ? z[t] : final_z; }
  int shock(long t) const { return t < steps ? xi[t] : final_xi; }
};

/// Simulates T periods. A prescribed infeasible transaction (e = 0) sets
/// wealth to zero, marks the path annihilated and stops it.
Trajectory run(const MarketModel& model, const CostSpec& spec, Strategy& strategy,
               std::span<const double> pi_minus0, double x_minus0, int z0, long T, std::uint64_t seed);

struct GrowthEstimate {
  double mean = 0.0;        // mean of (ln X_-(T) - ln x_-(0)) / T
  double std_error = 0.0;
  double tail_mean = 0.0;   // same over the window [T/2, T]
  double tail_std_error = 0.0;
  long n_paths = 0;
  long T = 0;
  long annihilated_paths = 0;
  std::vector<double> per_path;
};

struct InitialState {
  std::vector<double> pi_minus;
  double x_minus = 1.0;
  int z = 0;
};

/// Monte Carlo estimate over independent paths; path k uses
/// derive_seed(seed, k). Throws AssumptionError if any path is annihilated.
GrowthEstimate average_growth(const MarketModel& model, const CostSpec& spec, const Strategy& strategy,
                              const InitialState& init, long T, long n_paths, std::uint64_t seed);

struct FloorReport {
  long points_checked = 0;
  long violations = 0;
  double min_slack = 0.0;  // min over t of ln X_-(t) - ln(floor(t))
  long first_violation = -1;
  bool passed() const noexcept { return violations == 0; }
};

/// Checks X_-(t) >= X_-(0) e^{-rate t} prod_{s<t} zeta_hat(s+1) along a path
/// (rate = eta for proportional-cost runs, eta_M for mimicking runs).
FloorReport wealth_floor_check(const Trajectory& traj, const MarketModel& model, double rate);

struct LdRow {
  long T = 0;
  double p_hat = 0.0;
  double eps = 0.0;
  double tail_prob = 0.0;
  long n_paths = 0;
  long hits = 0;
};

struct LdReport {
  std::vector<LdRow> rows;
  double slope = 0.0;     // weighted least-squares slope of ln P against T
  double slope_se = 0.0;
  int points_used = 0;
  bool negative_95 = false;  // slope + 1.96 se < 0
};

/// Empirical P[(1/T) sum_{t=1..T} ln zeta_hat(t) <= p_hat - eps] with Z(0)
/// drawn from the invariant law.
LdReport ld_tail(const MarketModel& model, const std::vector<long>& T_grid, double eps, long n_paths,
                 std::uint64_t seed);

struct ShareHoldings {
  int n_assets = 0;
  std::vector<double> prices;    // (steps + 1) x n_assets
  std::vector<double> holdings;  // steps x n_assets, after trading at t
  long transactions_checked = 0;
  double max_relative_residual = 0.0;
  bool annihilated = false;
};

/// Rebuilds prices and share holdings and checks the self-financing identity
/// N_t . S_t = N_{t-1} . S_t - c~(N_{t-1}, N_t, S_t) at every trade, to
/// 1e-9 X_-(t). Throws std::runtime_error on a larger residual.
ShareHoldings to_share_holdings(const Trajectory& traj, const MarketModel& model, const CostSpec& spec,
                                std::span<const double> S0);

}  // namespace growthopt
