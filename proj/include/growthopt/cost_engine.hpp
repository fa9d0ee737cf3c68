#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace growthopt {

enum class CostVariant {
  additive,  // proportional part + C
  max,       // max(C, proportional part)
};

std::string to_string(CostVariant v);
CostVariant cost_variant_from_string(const std::string& s);

/// Transaction cost structure. Buy rates apply to increases of a position,
/// sell rates to decreases; `fixed` is charged in wealth units.
struct CostSpec {
  std::vector<double> buy_rates;
  std::vector<double> sell_rates;
  double fixed = 0.0;
  CostVariant variant = CostVariant::additive;

  int n_assets() const noexcept { return static_cast<int>(buy_rates.size()); }
  /// max_i max(c1_i, c2_i)
  double max_rate() const;
  double max_buy_rate() const;
  double max_sell_rate() const;
  /// Same rates with the fixed term removed.
  CostSpec proportional_only() const;
  /// Throws DomainError unless 0 <= rates < 1 and fixed >= 0.
  void validate() const;

  static CostSpec uniform(int n_assets, double rate, double fixed = 0.0,
                          CostVariant variant = CostVariant::additive);
};

/// c(pi_-, pi~) = sum_i c1_i (pi~^i - pi_-^i)^+ + c2_i (pi~^i - pi_-^i)^-,
/// pi_- in the simplex, pi~ in the sub-simplex.
double proportional_cost(const CostSpec& spec, std::span<const double> pi_minus,
                         std::span<const double> pi_tilde);

/// g(v) = v / sum(v).
std::vector<double> project_g(std::span<const double> v);

/// (pi <> zeta)^i = pi^i zeta^i / (pi . zeta).
std::vector<double> diamond(std::span<const double> pi, std::span<const double> zeta);
void diamond_into(std::span<const double> pi, std::span<const double> zeta, std::span<double> out);

/// F(delta) = c(pi_-, delta pi) + C / x_-  + delta (additive), or
/// max(C / x_-, c(pi_-, delta pi)) + delta (max variant).
double budget_function(const CostSpec& spec, std::span<const double> pi_minus,
                       std::span<const double> pi, double x_minus, double delta);

/// Wealth diminution factor e(pi_-, pi, x_-): the unique root of F(delta) = 1
/// in (0, 1], or 0 when no root exists there (transaction unaffordable).
/// Exact piecewise-linear solve over the breakpoints pi_-^i / pi^i.
double solve_e(const CostSpec& spec, std::span<const double> pi_minus, std::span<const double> pi,
               double x_minus);

/// e with the fixed term dropped; independent of wealth and always > 0.
double solve_e_prop(const CostSpec& spec, std::span<const double> pi_minus,
                    std::span<const double> pi);

/// Reference solver by plain bisection on F; kept as a fallback and as the
/// cross-check used by the verification suite.
double solve_e_bisect(const CostSpec& spec, std::span<const double> pi_minus,
                      std::span<const double> pi, double x_minus, int iterations = 200);

/// inf over all (pi_-, pi) of e(pi_-, pi, x). The infimum is attained at a
/// pair of unit vectors because F(t) is jointly convex in (pi_-, pi) for
/// fixed t. `x` <= 0 means the proportional-only factor e~.
double min_diminution(const CostSpec& spec, double x);

struct CostConstants {
  double eta = 0.0;      // -ln(1 - 2 c^ / (1 - c^))
  double eta_M = 0.0;    // same with the C / M surcharge
  double M = 0.0;        // wealth threshold with p_hat > eta_M
  double M_star = 0.0;   // M exp(eta_M)
  double x_star = 0.0;   // inf{x : e(., ., x) > 0 everywhere}
  double c_hat = 0.0;
};

/// eta for a given max rate.
double eta_of(double c_hat);
/// eta_M for wealth level M.
double eta_at(const CostSpec& spec, double M);

/// Affordability threshold x*, by bisection over unit-vector pairs.
double affordability_threshold(const CostSpec& spec);

/// Computes eta, x*, M, eta_M and M* for a cost spec given the growth floor
/// p_hat. M is the smallest value of a log grid over [1.01 x*, 1e6 C] with
/// eta_M < p_hat. Throws AssumptionError when eta >= p_hat or no M works.
CostConstants cost_constants(const CostSpec& spec, double p_hat, int m_grid_points = 2000);

/// Share-space cost oracle c~(N_1, N_2, S): N_1 holdings before, N_2 after.
using ShareCost = std::function<double(std::span<const double>, std::span<const double>,
                                       std::span<const double>)>;

/// Share-space form of a CostSpec (additive or max variant).
ShareCost share_space_cost(const CostSpec& spec);

struct CostCheckReport {
  long samples = 0;
  long lower_violations = 0;
  long upper_violations = 0;
  long subadditivity_violations = 0;
  double worst_lower_gap = 0.0;
  double worst_upper_gap = 0.0;
  double worst_subadditivity_gap = 0.0;
  bool passed() const noexcept {
    return lower_violations == 0 && upper_violations == 0 && subadditivity_violations == 0;
  }
};

/// Samples (N_1, N_2, N_3, S) and checks
///   proportional(lower) <= c~ <= proportional(upper) + C_upper,
///   c~(N_1, N_3, S) <= c~(N_1, N_2, S) + c~(N_2, N_3, S).
CostCheckReport general_cost_check(const CostSpec& lower, const ShareCost& candidate,
                                   const CostSpec& upper, long samples = 10000,
                                   unsigned long long seed = 20240521ULL);

}  // namespace growthopt
