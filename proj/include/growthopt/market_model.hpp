#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "growthopt/rng.hpp"

namespace growthopt {

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when the market or cost configuration violates a standing
/// assumption (ergodicity, positivity, cost drag below growth floor).
class AssumptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite Markov-modulated market.
///
/// Factor chain Z on {0..n_z-1} with transition P(z, z'), i.i.d. shocks on
/// {0..n_xi-1} with law nu, and gross returns zeta^i(z', xi') > 0 for each
/// asset i. Prices evolve as S^i(t+1) = S^i(t) * zeta^i(Z(t+1), xi(t+1)).
///
/// Immutable once constructed. The constructor only checks shapes; use
/// validate() for the numerical invariants.
class MarketModel {
 public:
  /// `returns` is laid out as [z][xi][asset].
  MarketModel(int n_assets, std::vector<double> transition, std::vector<double> shock_probs,
              std::vector<double> returns, std::vector<std::string> asset_names = {});

  int n_assets() const noexcept { return n_assets_; }
  int n_factors() const noexcept { return n_factors_; }
  int n_shocks() const noexcept { return n_shocks_; }

  double transition(int z, int z_next) const { return transition_[z * n_factors_ + z_next]; }
  std::span<const double> transition_row(int z) const {
    return {transition_.data() + z * n_factors_, static_cast<std::size_t>(n_factors_)};
  }
  std::span<const double> transition_matrix() const noexcept { return transition_; }
  std::span<const double> shock_probs() const noexcept { return shock_probs_; }
  std::span<const double> returns_table() const noexcept { return returns_; }

  /// Gross return vector zeta(z, xi) over assets.
  std::span<const double> returns(int z, int xi) const {
    return {returns_.data() + (z * n_shocks_ + xi) * n_assets_, static_cast<std::size_t>(n_assets_)};
  }
  /// min_i zeta^i(z, xi).
  double worst_return(int z, int xi) const { return worst_[z * n_shocks_ + xi]; }

  const std::vector<std::string>& asset_names() const noexcept { return asset_names_; }

  /// Samples (z', xi') with z' ~ P(z, .) and xi' ~ nu independently.
  std::pair<int, int> step(int z, Rng& rng) const;

 private:
  int n_assets_;
  int n_factors_;
  int n_shocks_;
  std::vector<double> transition_;
  std::vector<double> shock_probs_;
  std::vector<double> returns_;
  std::vector<double> worst_;
  std::vector<double> transition_cdf_;
  std::vector<double> shock_cdf_;
  std::vector<std::string> asset_names_;
};

struct ValidationReport {
  bool ok = true;
  bool rows_stochastic = true;
  bool shocks_normalized = true;
  bool returns_positive = true;  // finite and strictly positive
  bool ergodic = true;           // some kappa_n < 1
  int dobrushin_n = 0;           // 0 when no n <= n_max mixes
  double kappa = 1.0;
  std::vector<std::string> violations;
};

struct ErgodicReport {
  std::vector<double> invariant_measure;
  int dobrushin_n = 0;
  double kappa = 1.0;
  double p_hat = 0.0;
  double eta = 0.0;
  bool satisfies_A6 = false;
};

inline constexpr int kDefaultDobrushinHorizon = 64;

ValidationReport validate(const MarketModel& model, int n_max = kDefaultDobrushinHorizon);

/// Unique stationary law theta of the factor chain, residual <= 1e-12.
/// Throws AssumptionError when the chain has no unique invariant law.
std::vector<double> invariant_measure(const MarketModel& model);

/// n-step Dobrushin ergodicity coefficient
/// kappa_n = max_{z,z'} 1/2 ||P^n(z,.) - P^n(z',.)||_1.
double dobrushin(const MarketModel& model, int n);

/// Smallest n <= n_max with kappa_n < 1 together with kappa_n; (0, 1) if none.
std::pair<int, double> mixing_horizon(const MarketModel& model, int n_max = kDefaultDobrushinHorizon);

struct GrowthFloor {
  double p_hat = 0.0;
  std::vector<double> worst;  // [z][xi] table of min_i zeta^i
};

/// p_hat = sum_z theta(z) sum_xi nu(xi) ln min_i zeta^i(z, xi).
GrowthFloor growth_floor(const MarketModel& model);

/// h(pi, z) = sum_{z'} P(z,z') sum_xi nu(xi) ln(pi . zeta(z', xi)).
double expected_log_return(const MarketModel& model, std::span<const double> pi, int z);

/// Assumption summary for a model under a cost drag eta.
ErgodicReport ergodic_report(const MarketModel& model, double eta,
                             int n_max = kDefaultDobrushinHorizon);

/// Throws DomainError unless pi lies in the closed unit simplex (tolerance 1e-9).
void require_simplex(std::span<const double> pi, const char* what);

}  // namespace growthopt
