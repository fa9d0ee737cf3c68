#include "growthopt/cost_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "growthopt/market_model.hpp"
#include "growthopt/rng.hpp"

namespace growthopt {

namespace {

constexpr double kDomainTol = 1e-9;

void require_dims(const CostSpec& spec, std::span<const double> a, std::span<const double> b,
                  const char* what) {
  if (static_cast<int>(a.size()) != spec.n_assets() || static_cast<int>(b.size()) != spec.n_assets()) {
    std::ostringstream os;
    os << what << ": dimension mismatch with cost spec (" << spec.n_assets() << " assets)";
    throw DomainError(os.str());
  }
}

void require_subsimplex(std::span<const double> v, const char* what) {
  double total = 0.0;
  for (double x : v) {
    if (!(x >= -kDomainTol)) throw DomainError(std::string(what) + ": negative component");
    total += x;
  }
  if (total > 1.0 + kDomainTol) throw DomainError(std::string(what) + ": components sum above 1");
}

// c(pi_-, delta * pi) without domain checks.
double scaled_cost(const CostSpec& spec, std::span<const double> pm, std::span<const double> p,
                   double delta) {
  double c = 0.0;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    const double diff = delta * p[i] - pm[i];
    c += diff > 0.0 ? spec.buy_rates[i] * diff : -spec.sell_rates[i] * diff;
  }
  return c;
}

double budget(const CostSpec& spec, std::span<const double> pm, std::span<const double> p,
              double fixed_term, double delta) {
  const double prop = scaled_cost(spec, pm, p, delta);
  return (spec.variant == CostVariant::additive ? prop + fixed_term : std::max(fixed_term, prop)) + delta;
}

double solve_exact(const CostSpec& spec, std::span<const double> pm, std::span<const double> p,
                   double fixed_term) {
  if (fixed_term == 0.0 && std::equal(pm.begin(), pm.end(), p.begin())) return 1.0;
  if (budget(spec, pm, p, fixed_term, 0.0) >= 1.0) return 0.0;
  if (std::abs(budget(spec, pm, p, fixed_term, 1.0) - 1.0) <= 1e-12) return 1.0;

  const std::size_t d = pm.size();
  // Small fixed buffer: breakpoints are at most d.
  std::vector<double> edges;
  edges.reserve(d + 2);
  edges.push_back(0.0);
  for (std::size_t i = 0; i < d; ++i) {
    if (p[i] > 0.0) {
      const double b = pm[i] / p[i];
      if (b > 0.0 && b < 1.0) edges.push_back(b);
    }
  }
  edges.push_back(1.0);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const double lo = edges[s];
    const double hi = edges[s + 1];
    const bool last = s + 2 == edges.size();
    if (!last && budget(spec, pm, p, fixed_term, hi) < 1.0) continue;

    // F is affine on [lo, hi]: classify each coordinate at the midpoint.
    const double mid = 0.5 * (lo + hi);
    double slope = 0.0;
    double intercept = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      if (mid * p[i] > pm[i]) {
        slope += spec.buy_rates[i] * p[i];
        intercept -= spec.buy_rates[i] * pm[i];
      } else {
        slope -= spec.sell_rates[i] * p[i];
        intercept += spec.sell_rates[i] * pm[i];
      }
    }
    double root;
    if (spec.variant == CostVariant::additive) {
      root = (1.0 - intercept - fixed_term) / (1.0 + slope);
    } else {
      // Both branches of the max are increasing; the max crosses 1 at the
      // smaller of the two individual crossings.
      root = std::min(1.0 - fixed_term, (1.0 - intercept) / (1.0 + slope));
    }
    return std::clamp(root, lo, hi);
  }
  return 1.0;
}

}  // namespace

std::string to_string(CostVariant v) { return v == CostVariant::additive ? "additive" : "max"; }

CostVariant cost_variant_from_string(const std::string& s) {
  if (s == "additive") return CostVariant::additive;
  if (s == "max") return CostVariant::max;
  throw DomainError("unknown cost variant '" + s + "' (expected additive or max)");
}

double CostSpec::max_rate() const { return std::max(max_buy_rate(), max_sell_rate()); }

double CostSpec::max_buy_rate() const {
  return buy_rates.empty() ? 0.0 : *std::max_element(buy_rates.begin(), buy_rates.end());
}

double CostSpec::max_sell_rate() const {
  return sell_rates.empty() ? 0.0 : *std::max_element(sell_rates.begin(), sell_rates.end());
}

CostSpec CostSpec::proportional_only() const {
  CostSpec out = *this;
  out.fixed = 0.0;
  return out;
}

void CostSpec::validate() const {
  if (buy_rates.empty() || buy_rates.size() != sell_rates.size())
    throw DomainError("cost spec: buy and sell rate vectors must be non-empty and equal length");
  auto bad = [](double c) { return !(c >= 0.0 && c < 1.0); };
  if (std::any_of(buy_rates.begin(), buy_rates.end(), bad) ||
      std::any_of(sell_rates.begin(), sell_rates.end(), bad))
    throw DomainError("cost spec: proportional rates must lie in [0, 1)");
  if (!(fixed >= 0.0) || !std::isfinite(fixed)) throw DomainError("cost spec: fixed cost must be >= 0");
}

CostSpec CostSpec::uniform(int n_assets, double rate, double fixed, CostVariant variant) {
  CostSpec s;
  s.buy_rates.assign(n_assets, rate);
  s.sell_rates.assign(n_assets, rate);
  s.fixed = fixed;
  s.variant = variant;
  return s;
}

double proportional_cost(const CostSpec& spec, std::span<const double> pi_minus,
                         std::span<const double> pi_tilde) {
  require_dims(spec, pi_minus, pi_tilde, "proportional_cost");
  require_simplex(pi_minus, "proportional_cost (pi_minus)");
  require_subsimplex(pi_tilde, "proportional_cost (pi_tilde)");
  return scaled_cost(spec, pi_minus, pi_tilde, 1.0);
}

std::vector<double> project_g(std::span<const double> v) {
  double total = 0.0;
  for (double x : v) {
    if (!(x >= -kDomainTol)) throw DomainError("project_g: negative component");
    total += x;
  }
  if (!(total > 0.0)) throw DomainError("project_g: projection undefined for the zero vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x = std::max(x, 0.0) / total;
  return out;
}

void diamond_into(std::span<const double> pi, std::span<const double> zeta, std::span<double> out) {
  double total = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) total += pi[i] * zeta[i];
  for (std::size_t i = 0; i < pi.size(); ++i) out[i] = pi[i] * zeta[i] / total;
}

std::vector<double> diamond(std::span<const double> pi, std::span<const double> zeta) {
  if (pi.size() != zeta.size()) throw DomainError("diamond: dimension mismatch");
  std::vector<double> out(pi.size());
  diamond_into(pi, zeta, out);
  return out;
}

double budget_function(const CostSpec& spec, std::span<const double> pi_minus,
                       std::span<const double> pi, double x_minus, double delta) {
  require_dims(spec, pi_minus, pi, "budget_function");
  return budget(spec, pi_minus, pi, spec.fixed / x_minus, delta);
}

double solve_e(const CostSpec& spec, std::span<const double> pi_minus, std::span<const double> pi,
               double x_minus) {
  require_dims(spec, pi_minus, pi, "solve_e");
  if (!(x_minus > 0.0)) throw DomainError("solve_e: pre-transaction wealth must be positive");
  return solve_exact(spec, pi_minus, pi, spec.fixed / x_minus);
}

double solve_e_prop(const CostSpec& spec, std::span<const double> pi_minus,
                    std::span<const double> pi) {
  require_dims(spec, pi_minus, pi, "solve_e_prop");
  return solve_exact(spec, pi_minus, pi, 0.0);
}

double solve_e_bisect(const CostSpec& spec, std::span<const double> pi_minus,
                      std::span<const double> pi, double x_minus, int iterations) {
  require_dims(spec, pi_minus, pi, "solve_e_bisect");
  const double fixed_term = x_minus > 0.0 ? spec.fixed / x_minus : 0.0;
  if (budget(spec, pi_minus, pi, fixed_term, 0.0) >= 1.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    (budget(spec, pi_minus, pi, fixed_term, mid) < 1.0 ? lo : hi) = mid;
  }
  return hi;
}

double min_diminution(const CostSpec& spec, double x) {
  const int d = spec.n_assets();
  std::vector<double> a(d, 0.0), b(d, 0.0);
  double worst = 1.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (x <= 0.0 && i == j) continue;
      std::fill(a.begin(), a.end(), 0.0);
      std::fill(b.begin(), b.end(), 0.0);
      a[i] = 1.0;
      b[j] = 1.0;
      const double e = x > 0.0 ? solve_e(spec, a, b, x) : solve_e_prop(spec, a, b);
      worst = std::min(worst, e);
    }
  return worst;
}

double eta_of(double c_hat) {
  const double q = 2.0 * c_hat / (1.0 - c_hat);
  return q < 1.0 ? -std::log1p(-q) : std::numeric_limits<double>::infinity();
}

double eta_at(const CostSpec& spec, double M) {
  const double c_hat = spec.max_rate();
  const double q = (2.0 * c_hat + spec.fixed / M) / (1.0 - c_hat);
  return q < 1.0 ? -std::log1p(-q) : std::numeric_limits<double>::infinity();
}

double affordability_threshold(const CostSpec& spec) {
  if (spec.fixed == 0.0) return 0.0;
  auto feasible = [&](double x) { return min_diminution(spec, x) > 0.0; };
  double hi = spec.fixed;
  while (!feasible(hi)) hi *= 2.0;
  double lo = spec.fixed * 1e-6;
  while (feasible(lo)) lo *= 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

CostConstants cost_constants(const CostSpec& spec, double p_hat, int m_grid_points) {
  spec.validate();
  CostConstants k;
  k.c_hat = spec.max_rate();
  k.eta = eta_of(k.c_hat);
  if (!(k.eta < p_hat)) {
    std::ostringstream os;
    os << "cost drag too large: eta = " << k.eta << " >= p_hat = " << p_hat;
    throw AssumptionError(os.str());
  }
  k.x_star = affordability_threshold(spec);
  if (spec.fixed == 0.0) {
    k.eta_M = k.eta;
    return k;
  }
  const double lo = 1.01 * k.x_star;
  const double hi = 1e6 * spec.fixed;
  const double step = std::log(hi / lo) / std::max(1, m_grid_points - 1);
  for (int g = 0; g < m_grid_points; ++g) {
    const double M = lo * std::exp(step * g);
    const double eta_m = eta_at(spec, M);
    if (eta_m < p_hat) {
      k.M = M;
      k.eta_M = eta_m;
      k.M_star = M * std::exp(eta_m);
      return k;
    }
  }
  throw AssumptionError("no wealth threshold M on the search grid satisfies eta_M < p_hat");
}

ShareCost share_space_cost(const CostSpec& spec) {
  return [spec](std::span<const double> n1, std::span<const double> n2, std::span<const double> s) {
    double prop = 0.0;
    for (std::size_t i = 0; i < n1.size(); ++i) {
      const double diff = n2[i] - n1[i];
      prop += diff > 0.0 ? spec.buy_rates[i] * s[i] * diff : -spec.sell_rates[i] * s[i] * diff;
    }
    return spec.variant == CostVariant::additive ? prop + spec.fixed : std::max(spec.fixed, prop);
  };
}

CostCheckReport general_cost_check(const CostSpec& lower, const ShareCost& candidate,
                                   const CostSpec& upper, long samples, unsigned long long seed) {
  lower.validate();
  upper.validate();
  if (lower.n_assets() != upper.n_assets())
    throw DomainError("general_cost_check: lower and upper specs differ in dimension");
  const int d = lower.n_assets();
  CostSpec lower_prop = lower.proportional_only();
  lower_prop.variant = CostVariant::additive;
  CostSpec upper_add = upper;
  upper_add.variant = CostVariant::additive;
  const ShareCost lo_cost = share_space_cost(lower_prop);
  const ShareCost hi_cost = share_space_cost(upper_add);

  Rng rng(seed);
  std::vector<double> n1(d), n2(d), n3(d), s(d);
  CostCheckReport rep;
  for (long k = 0; k < samples; ++k) {
    for (int i = 0; i < d; ++i) {
      s[i] = std::exp(4.0 * (rng.uniform() - 0.5));
      n1[i] = 10.0 * rng.uniform();
      n2[i] = rng.uniform() < 0.2 ? n1[i] : 10.0 * rng.uniform();
      n3[i] = rng.uniform() < 0.2 ? n2[i] : 10.0 * rng.uniform();
    }
    const double c12 = candidate(n1, n2, s);
    const double c23 = candidate(n2, n3, s);
    const double c13 = candidate(n1, n3, s);
    const double lo = lo_cost(n1, n2, s);
    const double hi = hi_cost(n1, n2, s);
    const double slack = 1e-12 * (1.0 + std::abs(c12));
    if (c12 < lo - slack) {
      ++rep.lower_violations;
      rep.worst_lower_gap = std::max(rep.worst_lower_gap, lo - c12);
    }
    if (c12 > hi + slack) {
      ++rep.upper_violations;
      rep.worst_upper_gap = std::max(rep.worst_upper_gap, c12 - hi);
    }
    if (c13 > c12 + c23 + 1e-12 * (1.0 + std::abs(c13))) {
      ++rep.subadditivity_violations;
      rep.worst_subadditivity_gap = std::max(rep.worst_subadditivity_gap, c13 - c12 - c23);
    }
    ++rep.samples;
  }
  return rep;
}

}  // namespace growthopt
