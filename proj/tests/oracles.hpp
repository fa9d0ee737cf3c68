#pragma once

// Reference computations used by the tests. Everything here is written from
// the defining formulas and only reads raw model data; none of it calls the
// solver code it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "growthopt/cost_engine.hpp"
#include "growthopt/market_model.hpp"

namespace oracle {

using growthopt::CostSpec;
using growthopt::CostVariant;
using growthopt::MarketModel;

/// Budget function F(delta) from the definition.
inline double budget(const CostSpec& s, const std::vector<double>& pm, const std::vector<double>& pi, double x,
                     double delta, bool with_fixed = true) {
  double c = 0.0;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    const double diff = delta * pi[i] - pm[i];
    c += diff > 0.0 ? s.buy_rates[i] * diff : -s.sell_rates[i] * diff;
  }
  const double fixed = with_fixed ? s.fixed / x : 0.0;
  if (s.variant == CostVariant::max) return std::max(fixed, c) + delta;
  return c + fixed + delta;
}

/// Root of F = 1 in (0, 1] by plain bisection, 0 when there is none.
inline double bisect_e(const CostSpec& s, const std::vector<double>& pm, const std::vector<double>& pi, double x,
                       bool with_fixed = true, int iterations = 200) {
  if (budget(s, pm, pi, x, 0.0, with_fixed) >= 1.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < iterations; ++k) {
    const double mid = 0.5 * (lo + hi);
    (budget(s, pm, pi, x, mid, with_fixed) < 1.0 ? lo : hi) = mid;
  }
  return hi;
}

inline std::vector<double> unit(int d, int i) {
  std::vector<double> e(d, 0.0);
  e[i] = 1.0;
  return e;
}

/// min over unit-vector pairs of the bisection factor; with_fixed = false
/// gives inf e~ (pairs i != j suffice since e~(e_i, e_i) = 1).
inline double min_vertex_e(const CostSpec& s, double x, bool with_fixed) {
  const int d = s.n_assets();
  double best = 1.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j && !with_fixed) continue;
      best = std::min(best, bisect_e(s, unit(d, i), unit(d, j), x, with_fixed));
    }
  return best;
}

/// Affordability threshold from the worst sale: liquidating asset i in full
/// costs c2_i, so the additive form needs C / x < 1 - max c2, the max form C / x < 1.
inline double x_star_closed(const CostSpec& s) {
  if (s.fixed == 0.0) return 0.0;
  if (s.variant == CostVariant::max) return s.fixed;
  return s.fixed / (1.0 - *std::max_element(s.sell_rates.begin(), s.sell_rates.end()));
}

inline double eta_closed(double c_hat) { return -std::log(1.0 - 2.0 * c_hat / (1.0 - c_hat)); }

/// Solves A x = b (n x n, row-major) by Gaussian elimination with pivoting.
inline std::vector<double> gauss_solve(std::vector<double> a, std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[p * n + c])) p = r;
    for (int k = 0; k < n; ++k) std::swap(a[c * n + k], a[p * n + k]);
    std::swap(b[c], b[p]);
    for (int r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      for (int k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[r];
    for (int k = r + 1; k < n; ++k) acc -= a[r * n + k] * x[k];
    x[r] = acc / a[r * n + r];
  }
  return x;
}

/// Stationary law: theta (P - I) = 0 with the last equation replaced by sum = 1.
inline std::vector<double> stationary(const MarketModel& m) {
  const int n = m.n_factors();
  std::vector<double> a(n * n), b(n, 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a[r * n + c] = m.transition(c, r) - (r == c ? 1.0 : 0.0);
  for (int c = 0; c < n; ++c) a[(n - 1) * n + c] = 1.0;
  b[n - 1] = 1.0;
  return gauss_solve(a, b);
}

inline std::vector<double> transition_power(const MarketModel& m, int steps) {
  const int n = m.n_factors();
  std::vector<double> p(n * n, 0.0);
  for (int i = 0; i < n; ++i) p[i * n + i] = 1.0;
  for (int s = 0; s < steps; ++s) {
    std::vector<double> q(n * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) q[i * n + j] += p[i * n + k] * m.transition(k, j);
    p = q;
  }
  return p;
}

/// kappa_n = max over row pairs and subsets B of |P^n(z, B) - P^n(z', B)|.
inline double dobrushin_sets(const MarketModel& m, int steps) {
  const int n = m.n_factors();
  const std::vector<double> p = transition_power(m, steps);
  double best = 0.0;
  for (int z = 0; z < n; ++z)
    for (int w = 0; w < n; ++w)
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        double diff = 0.0;
        for (int j = 0; j < n; ++j)
          if (mask & (1u << j)) diff += p[z * n + j] - p[w * n + j];
        best = std::max(best, std::abs(diff));
      }
  return best;
}

/// h(pi, z) straight from the definition.
inline double h(const MarketModel& m, const std::vector<double>& pi, int z) {
  double acc = 0.0;
  for (int zn = 0; zn < m.n_factors(); ++zn)
    for (int xi = 0; xi < m.n_shocks(); ++xi) {
      const auto r = m.returns(zn, xi);
      double g = 0.0;
      for (std::size_t i = 0; i < pi.size(); ++i) g += pi[i] * r[i];
      acc += m.transition(z, zn) * m.shock_probs()[xi] * std::log(g);
    }
  return acc;
}

/// Every point of the simplex with coordinates in (1/m) Z, by recursion.
inline std::vector<std::vector<double>> simplex_points(int d, int m) {
  std::vector<std::vector<double>> out;
  std::vector<int> counts(d, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == d - 1) {
      counts[i] = left;
      std::vector<double> p(d);
      for (int k = 0; k < d; ++k) p[k] = static_cast<double>(counts[k]) / m;
      out.push_back(p);
      return;
    }
    for (int c = left; c >= 0; --c) {
      counts[i] = c;
      rec(i + 1, left - c);
    }
  };
  rec(0, m);
  return out;
}

/// max over mesh points of h(., z) for each z.
inline std::vector<double> best_h(const MarketModel& m, int order) {
  const auto pts = simplex_points(m.n_assets(), order);
  std::vector<double> best(m.n_factors(), -std::numeric_limits<double>::infinity());
  for (int z = 0; z < m.n_factors(); ++z)
    for (const auto& p : pts) best[z] = std::max(best[z], h(m, p, z));
  return best;
}

/// Cost-free discounted value: with free rebalancing the value ignores the
/// current proportions, V = H + beta P V with H(z) = max_pi h(pi, z).
inline std::vector<double> cost_free_value(const MarketModel& m, int order, double beta) {
  const int n = m.n_factors();
  const std::vector<double> hb = best_h(m, order);
  std::vector<double> a(n * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a[r * n + c] = (r == c ? 1.0 : 0.0) - beta * m.transition(r, c);
  return gauss_solve(a, hb);
}

/// sum_z theta(z) max_pi h(pi, z).
inline double free_rebalancing_growth(const MarketModel& m, int order) {
  const std::vector<double> th = stationary(m);
  const std::vector<double> hb = best_h(m, order);
  double acc = 0.0;
  for (int z = 0; z < m.n_factors(); ++z) acc += th[z] * hb[z];
  return acc;
}

/// E_{theta x nu} ln zeta^i.
inline double stationary_log_return(const MarketModel& m, int asset) {
  const std::vector<double> th = stationary(m);
  double acc = 0.0;
  for (int z = 0; z < m.n_factors(); ++z)
    for (int xi = 0; xi < m.n_shocks(); ++xi) acc += th[z] * m.shock_probs()[xi] * std::log(m.returns(z, xi)[asset]);
  return acc;
}

/// p_hat from the definition.
inline double p_hat(const MarketModel& m) {
  const std::vector<double> th = stationary(m);
  double acc = 0.0;
  for (int z = 0; z < m.n_factors(); ++z)
    for (int xi = 0; xi < m.n_shocks(); ++xi) {
      const auto r = m.returns(z, xi);
      acc += th[z] * m.shock_probs()[xi] * std::log(*std::min_element(r.begin(), r.end()));
    }
  return acc;
}

/// Cramer rate I(a) = sup_t (t a - ln E e^{t X}) of a finite distribution,
/// by golden-section search over t (the objective is concave).
inline double cramer_rate(const std::vector<double>& values, const std::vector<double>& probs, double a) {
  auto obj = [&](double t) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : values) mx = std::max(mx, t * v);
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) s += probs[k] * std::exp(t * values[k] - mx);
    return t * a - (mx + std::log(s));
  };
  double lo = -1e5, hi = 1e5;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = obj(x1), f2 = obj(x2);
  for (int k = 0; k < 400; ++k) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = obj(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = obj(x1);
    }
  }
  return obj(0.5 * (lo + hi));
}

}  // namespace oracle
