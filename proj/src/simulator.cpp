#include "growthopt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "growthopt/model_io.hpp"
#include "growthopt/rng.hpp"

namespace growthopt {

namespace {

constexpr double kDriftTol = 1e-9;

// Pairwise summation keeps the mean independent of how paths are batched.
double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

std::pair<double, double> mean_and_se(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n == 0) return {0.0, 0.0};
  const double mean = pairwise_sum(v.data(), n) / static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  const double var = pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

void check_proportions(std::span<const double> pi, const char* what) {
  double total = 0.0;
  for (double x : pi) {
    if (!(x >= -kDriftTol)) throw std::runtime_error(std::string(what) + ": negative proportion");
    total += x;
  }
  if (std::abs(total - 1.0) > kDriftTol)
    throw std::runtime_error(std::string(what) + ": proportions drifted off the simplex");
}

}  // namespace

ConstantRebalance::ConstantRebalance(std::vector<double> target, long period)
    : target_(std::move(target)), period_(period) {
  require_simplex(target_, "constant rebalance target");
  if (period_ < 1) throw DomainError("constant rebalance: period must be >= 1");
}

Decision ConstantRebalance::decide(std::span<const double>, double, int, long t) {
  Decision d;
  if (t % period_ == 0) {
    d.transact = true;
    d.target = target_;
  }
  return d;
}

GridPolicyStrategy::GridPolicyStrategy(Policy policy) : policy_(std::move(policy)) {
  if (policy_.target.size() != policy_.grid.size() || policy_.impulse.size() != policy_.grid.size())
    throw DomainError("grid policy: tables do not match the grid");
}

Decision GridPolicyStrategy::decide(std::span<const double> pi_minus, double x_minus, int z, long) {
  const StateGrid& g = policy_.grid;
  const int node = g.mesh.nearest(pi_minus);
  const int j = g.wealth.nearest(std::log(x_minus));
  const std::size_t s = g.index(node, j, z);
  Decision d;
  if (policy_.impulse[s]) {
    const auto tgt = g.mesh.node(policy_.target[s]);
    d.transact = true;
    d.target.assign(tgt.begin(), tgt.end());
  }
  return d;
}

MimickingStrategy::MimickingStrategy(MimickingPolicy policy)
    : policy_(std::move(policy)), base_(policy_.base) {
  if (!policy_.base.wealth_free()) throw DomainError("mimicking strategy: base policy must be wealth-free");
}

void MimickingStrategy::reset() {
  recovering_ = false;
  shadow_minus_.clear();
  shadow_.clear();
  base_.reset();
}

Decision MimickingStrategy::decide(std::span<const double> pi_minus, double x_minus, int z, long t) {
  if (shadow_minus_.empty()) shadow_minus_.assign(pi_minus.begin(), pi_minus.end());
  // Advance the shadow copy of the base strategy.
  Decision shadow = base_.decide(shadow_minus_, 1.0, z, t);
  if (shadow.transact) {
    shadow_ = shadow.target;
  } else {
    shadow_ = shadow_minus_;
  }

  Decision d;
  if (recovering_) {
    if (x_minus >= policy_.M_star) {
      recovering_ = false;
      d.transact = true;
      d.target = shadow_;
    }
  } else if (x_minus < policy_.M) {
    recovering_ = true;
  } else if (shadow.transact) {
    d.transact = true;
    d.target = shadow_;
  }
  return d;
}

void MimickingStrategy::observe(std::span<const double> zeta) {
  shadow_minus_.resize(shadow_.size());
  diamond_into(shadow_, zeta, shadow_minus_);
}

Trajectory run(const MarketModel& model, const CostSpec& spec, Strategy& strategy,
               std::span<const double> pi_minus0, double x_minus0, int z0, long T, std::uint64_t seed) {
  const int d = model.n_assets();
  if (spec.n_assets() != d) throw DomainError("run: cost spec and model disagree on the number of assets");
  if (static_cast<int>(pi_minus0.size()) != d) throw DomainError("run: initial proportions have wrong size");
  require_simplex(pi_minus0, "run: initial proportions");
  if (!(x_minus0 > 0.0)) throw DomainError("run: initial wealth must be positive");
  if (z0 < 0 || z0 >= model.n_factors()) throw DomainError("run: initial factor state out of range");
  if (T < 1) throw DomainError("run: horizon must be >= 1");

  Trajectory tr;
  tr.n_assets = d;
  tr.seed = seed;
  tr.model_hash = model_hash(model, spec);
  tr.z.reserve(T);
  tr.xi.reserve(T);
  tr.pi_minus.reserve(static_cast<std::size_t>(T) * d);
  tr.pi.reserve(static_cast<std::size_t>(T) * d);
  tr.transacted.reserve(T);
  tr.e.reserve(T);
  tr.log_x_minus.reserve(T);
  tr.log_x.reserve(T);

  Rng rng(seed);
  strategy.reset();
  std::vector<double> pm(pi_minus0.begin(), pi_minus0.end());
  std::vector<double> p(d);
  double log_xm = std::log(x_minus0);
  int z = z0;
  int xi = -1;
  for (long t = 0; t < T; ++t) {
    const double x_minus = std::exp(log_xm);
    Decision dec = strategy.decide(pm, x_minus, z, t);
    bool traded = false;
    double e = 1.0;
    if (dec.transact) {
      if (static_cast<int>(dec.target.size()) != d) throw DomainError("strategy returned a target of wrong size");
      require_simplex(dec.target, "strategy target");
      if (!std::equal(pm.begin(), pm.end(), dec.target.begin())) {
        traded = true;
        e = solve_e(spec, pm, dec.target, x_minus);
      }
    }
    const std::vector<double>& held = traded ? dec.target : pm;
    p.assign(held.begin(), held.end());

    tr.z.push_back(z);
    tr.xi.push_back(xi);
    tr.pi_minus.insert(tr.pi_minus.end(), pm.begin(), pm.end());
    tr.pi.insert(tr.pi.end(), p.begin(), p.end());
    tr.transacted.push_back(traded ? 1 : 0);
    tr.e.push_back(e);
    tr.log_x_minus.push_back(log_xm);
    ++tr.steps;
    if (!(e > 0.0)) {
      tr.log_x.push_back(-std::numeric_limits<double>::infinity());
      tr.annihilated = true;
      tr.final_z = z;
      tr.final_xi = xi;
      tr.final_pi_minus = pm;
      tr.final_log_x_minus = -std::numeric_limits<double>::infinity();
      return tr;
    }
    const double log_x = traded ? log_xm + std::log(e) : log_xm;
    tr.log_x.push_back(log_x);

    const auto [zn, xin] = model.step(z, rng);
    const auto zeta = model.returns(zn, xin);
    double growth = 0.0;
    for (int i = 0; i < d; ++i) growth += p[i] * zeta[i];
    diamond_into(p, zeta, pm);
    check_proportions(pm, "run");
    log_xm = log_x + std::log(growth);
    z = zn;
    xi = xin;
    strategy.observe(zeta);
  }
  tr.final_z = z;
  tr.final_xi = xi;
  tr.final_pi_minus = pm;
  tr.final_log_x_minus = log_xm;
  return tr;
}

GrowthEstimate average_growth(const MarketModel& model, const CostSpec& spec, const Strategy& strategy,
                              const InitialState& init, long T, long n_paths, std::uint64_t seed) {
  if (T < 1 || n_paths < 1) throw DomainError("average_growth: T and n_paths must be >= 1");
  GrowthEstimate est;
  est.T = T;
  est.n_paths = n_paths;
  est.per_path.assign(n_paths, 0.0);
  std::vector<double> tail(n_paths, 0.0);
  std::vector<std::uint8_t> dead(n_paths, 0);
  const long half = T / 2;
  const double log_x0 = std::log(init.x_minus);

  std::string error;
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < n_paths; ++k) {
    try {
      auto strat = strategy.clone();
      const Trajectory tr = run(model, spec, *strat, init.pi_minus, init.x_minus, init.z, T,
                                derive_seed(seed, static_cast<std::uint64_t>(k)));
      if (tr.annihilated) {
        dead[k] = 1;
        continue;
      }
      est.per_path[k] = (tr.final_log_x_minus - log_x0) / static_cast<double>(T);
      tail[k] = (tr.final_log_x_minus - tr.log_wealth_minus(half)) / static_cast<double>(T - half);
    } catch (const std::exception& ex) {
#pragma omp critical(growthopt_average_growth)
      if (error.empty()) error = ex.what();
    }
  }
  if (!error.empty()) throw std::runtime_error("average_growth: " + error);
  est.annihilated_paths = std::count(dead.begin(), dead.end(), 1);
  if (est.annihilated_paths > 0) {
    std::ostringstream os;
    os << "average_growth: " << est.annihilated_paths << " of " << n_paths
       << " paths were annihilated by an unaffordable transaction";
    throw AssumptionError(os.str());
  }
  std::tie(est.mean, est.std_error) = mean_and_se(est.per_path);
  std::tie(est.tail_mean, est.tail_std_error) = mean_and_se(tail);
  return est;
}

FloorReport wealth_floor_check(const Trajectory& traj, const MarketModel& model, double rate) {
  FloorReport rep;
  rep.min_slack = std::numeric_limits<double>::infinity();
  const double log_x0 = traj.log_wealth_minus(0);
  double log_floor = log_x0;
  const long last = traj.annihilated ? traj.steps - 1 : traj.steps;
  for (long t = 0; t <= last; ++t) {
    if (t > 0) log_floor += std::log(model.worst_return(traj.factor(t), traj.shock(t))) - rate;
    const double lx = traj.log_wealth_minus(t);
    const double slack = lx - log_floor;
    ++rep.points_checked;
    rep.min_slack = std::min(rep.min_slack, slack);
    if (slack < -1e-12 * (1.0 + std::abs(log_floor))) {
      ++rep.violations;
      if (rep.first_violation < 0) rep.first_violation = t;
    }
  }
  return rep;
}

LdReport ld_tail(const MarketModel& model, const std::vector<long>& T_grid, double eps, long n_paths,
                 std::uint64_t seed) {
  if (!(eps > 0.0)) throw DomainError("ld_tail: eps must be positive");
  if (n_paths < 1) throw DomainError("ld_tail: n_paths must be >= 1");
  const std::vector<double> theta = invariant_measure(model);
  std::vector<double> theta_cdf(theta.size());
  std::partial_sum(theta.begin(), theta.end(), theta_cdf.begin());
  theta_cdf.back() = 1.0;
  const GrowthFloor floor = growth_floor(model);
  std::vector<double> log_worst(floor.worst.size());
  for (std::size_t k = 0; k < log_worst.size(); ++k) log_worst[k] = std::log(floor.worst[k]);
  const int n_xi = model.n_shocks();

  LdReport rep;
  for (std::size_t g = 0; g < T_grid.size(); ++g) {
    const long T = T_grid[g];
    if (T < 1) throw DomainError("ld_tail: horizons must be >= 1");
    const double threshold = (floor.p_hat - eps) * static_cast<double>(T);
    long hits = 0;
#pragma omp parallel for reduction(+ : hits) schedule(static)
    for (long k = 0; k < n_paths; ++k) {
      Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(T)), static_cast<std::uint64_t>(k)));
      int z = rng.categorical(theta_cdf);
      double sum = 0.0;
      for (long t = 0; t < T; ++t) {
        const auto [zn, xin] = model.step(z, rng);
        sum += log_worst[static_cast<std::size_t>(zn) * n_xi + xin];
        z = zn;
      }
      if (sum <= threshold) ++hits;
    }
    LdRow row;
    row.T = T;
    row.p_hat = floor.p_hat;
    row.eps = eps;
    row.n_paths = n_paths;
    row.hits = hits;
    row.tail_prob = static_cast<double>(hits) / static_cast<double>(n_paths);
    rep.rows.push_back(row);
  }

  // Weighted least squares of ln P on T; Var(ln P_hat) ~ (1 - P) / (n P).
  double sw = 0.0, swt = 0.0, swy = 0.0;
  for (const LdRow& r : rep.rows) {
    if (r.hits == 0 || r.hits == r.n_paths) continue;
    const double p = r.tail_prob;
    const double w = static_cast<double>(r.n_paths) * p / (1.0 - p);
    sw += w;
    swt += w * static_cast<double>(r.T);
    swy += w * std::log(p);
    ++rep.points_used;
  }
  if (rep.points_used >= 2) {
    const double tbar = swt / sw;
    const double ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (const LdRow& r : rep.rows) {
      if (r.hits == 0 || r.hits == r.n_paths) continue;
      const double p = r.tail_prob;
      const double w = static_cast<double>(r.n_paths) * p / (1.0 - p);
      const double dt = static_cast<double>(r.T) - tbar;
      sxx += w * dt * dt;
      sxy += w * dt * (std::log(p) - ybar);
    }
    if (sxx > 0.0) {
      rep.slope = sxy / sxx;
      rep.slope_se = std::sqrt(1.0 / sxx);
      rep.negative_95 = rep.slope + 1.96 * rep.slope_se < 0.0;
    }
  }
  return rep;
}

ShareHoldings to_share_holdings(const Trajectory& traj, const MarketModel& model, const CostSpec& spec,
                                std::span<const double> S0) {
  const int d = traj.n_assets;
  if (static_cast<int>(S0.size()) != d) throw DomainError("to_share_holdings: price vector has wrong size");
  for (double s : S0)
    if (!(s > 0.0)) throw DomainError("to_share_holdings: initial prices must be positive");
  const ShareCost cost = share_space_cost(spec);

  ShareHoldings out;
  out.n_assets = d;
  out.annihilated = traj.annihilated;
  out.prices.assign(S0.begin(), S0.end());
  std::vector<double> before(d), after(d), price(S0.begin(), S0.end());
  {
    const double x0 = std::exp(traj.log_wealth_minus(0));
    const auto pm = traj.pi_minus_at(0);
    for (int i = 0; i < d; ++i) before[i] = pm[i] * x0 / price[i];
  }
  for (long t = 0; t < traj.steps; ++t) {
    if (t > 0) {
      const auto zeta = model.returns(traj.factor(t), traj.shock(t));
      for (int i = 0; i < d; ++i) price[i] *= zeta[i];
      out.prices.insert(out.prices.end(), price.begin(), price.end());
    }
    const double x_minus = std::exp(traj.log_x_minus[t]);
    // Holdings carried into t must reproduce the recorded pre-trade state.
    const auto pm = traj.pi_minus_at(t);
    for (int i = 0; i < d; ++i) {
      const double implied = pm[i] * x_minus / price[i];
      if (std::abs(implied - before[i]) * price[i] > 1e-9 * x_minus) {
        std::ostringstream os;
        os << "to_share_holdings: holdings carried into t = " << t << " disagree with the recorded proportions";
        throw std::runtime_error(os.str());
      }
    }
    if (traj.annihilated && t + 1 == traj.steps) {
      std::fill(after.begin(), after.end(), 0.0);
      out.holdings.insert(out.holdings.end(), after.begin(), after.end());
      break;
    }
    const double x = std::exp(traj.log_x[t]);
    const auto p = traj.pi_at(t);
    for (int i = 0; i < d; ++i) after[i] = p[i] * x / price[i];
    if (traj.transacted[t]) {
      double lhs = 0.0, rhs = 0.0;
      for (int i = 0; i < d; ++i) {
        lhs += after[i] * price[i];
        rhs += before[i] * price[i];
      }
      rhs -= cost(before, after, price);
      const double residual = std::abs(lhs - rhs) / x_minus;
      out.max_relative_residual = std::max(out.max_relative_residual, residual);
      ++out.transactions_checked;
      if (residual > 1e-9) {
        std::ostringstream os;
        os << "to_share_holdings: self-financing residual " << residual << " (relative to X_-) at t = " << t;
        throw std::runtime_error(os.str());
      }
    }
    out.holdings.insert(out.holdings.end(), after.begin(), after.end());
    before = after;
  }
  return out;
}

}  // namespace growthopt
