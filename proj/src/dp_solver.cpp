#include "growthopt/dp_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace growthopt {

std::string to_string(ValueVariant v) {
  return v == ValueVariant::fixed_cost ? "fixed_cost" : "proportional";
}

double ValueFunction::sup() const { return *std::max_element(values.begin(), values.end()); }
double ValueFunction::inf() const { return *std::min_element(values.begin(), values.end()); }

double Policy::disagreement(const Policy& other) const {
  if (other.target.size() != target.size()) throw DomainError("policy comparison: grid mismatch");
  if (target.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t s = 0; s < target.size(); ++s)
    if (impulse[s] != other.impulse[s] || target[s] != other.target[s]) ++diff;
  return static_cast<double>(diff) / static_cast<double>(target.size());
}

DiscountedProblem::DiscountedProblem(const MarketModel& model, const CostSpec& spec,
                                     const GridSpec& grid_spec, double beta, ValueVariant variant,
                                     SolverOptions options)
    : grid_(StateGrid::build(grid_spec, model.n_assets(), model.n_factors(),
                             variant == ValueVariant::fixed_cost && spec.fixed > 0.0)),
      spec_(variant == ValueVariant::proportional ? spec.proportional_only() : spec),
      beta_(beta),
      variant_(variant),
      options_(options) {
  spec_.validate();
  if (spec_.n_assets() != model.n_assets())
    throw DomainError("cost spec and market model disagree on the number of assets");
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("discount factor must lie in (0, 1)");
  if (!(options.tol > 0.0) || !(options.tie_eps >= 0.0))
    throw DomainError("solver tolerances must be positive");

  const SimplexMesh& mesh = grid_.mesh;
  const WealthMesh& wm = grid_.wealth;
  n_ = mesh.size();
  nx_ = wm.size();
  nz_ = model.n_factors();
  const int d = model.n_assets();
  const int n_xi = model.n_shocks();
  const std::size_t slice = static_cast<std::size_t>(n_) * nx_;
  transition_.assign(model.transition_matrix().begin(), model.transition_matrix().end());

  h_.resize(static_cast<std::size_t>(nz_) * n_);
  for (int z = 0; z < nz_; ++z)
    for (int a = 0; a < n_; ++a) h_[static_cast<std::size_t>(z) * n_ + a] = expected_log_return(model, mesh.node(a), z);

  // Drift stencils: for each next factor z', the expected value of v(., ., z')
  // reached from (a, j) is a sparse combination of that factor's slice.
  drift_.resize(nz_);
  std::vector<double> moved(d);
  std::vector<std::pair<std::uint32_t, double>> entries;
  for (int zn = 0; zn < nz_; ++zn) {
    Sparse& sp = drift_[zn];
    sp.start.reserve(slice + 1);
    sp.start.push_back(0);
    for (int j = 0; j < nx_; ++j) {
      for (int a = 0; a < n_; ++a) {
        entries.clear();
        const auto pi = mesh.node(a);
        for (int xi = 0; xi < n_xi; ++xi) {
          const double p = model.shock_probs()[xi];
          if (p == 0.0) continue;
          const auto zeta = model.returns(zn, xi);
          diamond_into(pi, zeta, moved);
          double growth = 0.0;
          for (int i = 0; i < d; ++i) growth += pi[i] * zeta[i];
          const SimplexStencil st = mesh.stencil(moved, grid_.interpolation);
          const auto [j0, wx] = wm.stencil_at(wm.position(std::log(wm.x(j)) + std::log(growth)));
          for (int k = 0; k < st.size; ++k) {
            const double w = p * st.weight[k];
            if (1.0 - wx > 0.0)
              entries.emplace_back(static_cast<std::uint32_t>(j0 * n_ + st.node[k]), w * (1.0 - wx));
            if (wx > 0.0)
              entries.emplace_back(static_cast<std::uint32_t>((j0 + 1) * n_ + st.node[k]), w * wx);
          }
        }
        std::sort(entries.begin(), entries.end());
        for (std::size_t e = 0; e < entries.size(); ++e) {
          if (!sp.col.empty() && sp.col.size() > sp.start.back() && sp.col.back() == entries[e].first) {
            sp.w.back() += entries[e].second;
          } else {
            sp.col.push_back(entries[e].first);
            sp.w.push_back(entries[e].second);
          }
        }
        sp.start.push_back(static_cast<std::uint32_t>(sp.col.size()));
      }
    }
  }

  // Transaction factors and post-trade wealth stencils.
  const std::size_t trades = static_cast<std::size_t>(nx_) * n_ * n_;
  trade_log_e_.assign(trades, kInfeasible);
  trade_j0_.assign(trades, 0);
  trade_w_.assign(trades, 0.0);
  for (int j = 0; j < nx_; ++j) {
    for (int a = 0; a < n_; ++a) {
      for (int b = 0; b < n_; ++b) {
        const double e = wm.trivial() ? solve_e_prop(spec_, mesh.node(a), mesh.node(b))
                                      : solve_e(spec_, mesh.node(a), mesh.node(b), wm.x(j));
        if (!(e > 0.0)) continue;
        const std::size_t idx = (static_cast<std::size_t>(j) * n_ + a) * n_ + b;
        trade_log_e_[idx] = std::log(e);
        const auto [j0, wx] = wm.stencil_at(wm.position(std::log(wm.x(j)) + std::log(e)));
        trade_j0_[idx] = j0;
        trade_w_[idx] = wx;
      }
    }
  }
}

double DiscountedProblem::h_span() const {
  const auto [lo, hi] = std::minmax_element(h_.begin(), h_.end());
  return *hi - *lo;
}

double DiscountedProblem::h_sup_abs() const {
  double m = 0.0;
  for (double x : h_) m = std::max(m, std::abs(x));
  return m;
}

void DiscountedProblem::expectation(std::span<const double> v, std::span<double> out) const {
  const std::size_t slice = static_cast<std::size_t>(n_) * nx_;
  std::vector<double> u(slice * nz_);
  for (int zn = 0; zn < nz_; ++zn) {
    const Sparse& sp = drift_[zn];
    const double* vz = v.data() + zn * slice;
    double* uz = u.data() + zn * slice;
#pragma omp parallel for schedule(static) if (slice > 4096)
    for (std::size_t r = 0; r < slice; ++r) {
      double acc = 0.0;
      for (std::uint32_t k = sp.start[r]; k < sp.start[r + 1]; ++k) acc += sp.w[k] * vz[sp.col[k]];
      uz[r] = acc;
    }
  }
  for (int z = 0; z < nz_; ++z) {
    const double* prow = transition_.data() + static_cast<std::size_t>(z) * nz_;
    double* oz = out.data() + z * slice;
    for (std::size_t r = 0; r < slice; ++r) {
      double acc = 0.0;
      for (int zn = 0; zn < nz_; ++zn) acc += prow[zn] * u[zn * slice + r];
      oz[r] = acc;
    }
  }
}

void DiscountedProblem::continuation(std::span<const double> v, std::span<double> w) const {
  const std::size_t slice = static_cast<std::size_t>(n_) * nx_;
  expectation(v, w);
  for (int z = 0; z < nz_; ++z) {
    double* wz = w.data() + z * slice;
    const double* hz = h_.data() + static_cast<std::size_t>(z) * n_;
    for (std::size_t r = 0; r < slice; ++r) wz[r] = hz[r % n_] + beta_ * wz[r];
  }
}

void DiscountedProblem::hold_step(std::span<const double> v, std::span<double> out) const {
  continuation(v, out);
}

void DiscountedProblem::bellman(std::span<const double> v, std::span<double> out,
                                std::uint8_t* impulse, int* target) const {
  const std::size_t slice = static_cast<std::size_t>(n_) * nx_;
  std::vector<double> w(size());
  continuation(v, w);
  const double tie = options_.tie_eps;
  const int total_rows = nz_ * nx_;
#pragma omp parallel for schedule(static) if (size() > 4096)
  for (int row = 0; row < total_rows; ++row) {
    const int z = row / nx_;
    const int j = row % nx_;
    const double* wz = w.data() + z * slice;
    for (int a = 0; a < n_; ++a) {
      const double hold = wz[static_cast<std::size_t>(j) * n_ + a];
      double best = kInfeasible;
      int best_b = -1;
      const std::size_t base = (static_cast<std::size_t>(j) * n_ + a) * n_;
      for (int b = 0; b < n_; ++b) {
        if (b == a) continue;
        const double le = trade_log_e_[base + b];
        if (le == kInfeasible) continue;
        const int j0 = trade_j0_[base + b];
        const double wx = trade_w_[base + b];
        double cont = wz[static_cast<std::size_t>(j0) * n_ + b];
        if (wx > 0.0) cont = (1.0 - wx) * cont + wx * wz[static_cast<std::size_t>(j0 + 1) * n_ + b];
        const double val = le + cont;
        if (val > best) {
          best = val;
          best_b = b;
        }
      }
      const std::size_t s = static_cast<std::size_t>(row) * n_ + a;
      out[s] = std::max(hold, best);
      if (impulse != nullptr) {
        const bool act = best_b >= 0 && best > hold + tie;
        impulse[s] = act ? 1 : 0;
        target[s] = act ? best_b : a;
      }
    }
  }
}

double DiscountedProblem::value_at(std::span<const double> v, int node, double x, int z) const {
  const WealthMesh& wm = grid_.wealth;
  if (wm.trivial()) return v[grid_.index(node, 0, z)];
  const auto [j0, wx] = wm.stencil_at(wm.position(std::log(x)));
  double val = v[grid_.index(node, j0, z)];
  if (wx > 0.0) val = (1.0 - wx) * val + wx * v[grid_.index(node, j0 + 1, z)];
  return val;
}

double DiscountedProblem::value_at(std::span<const double> v, std::span<const double> pi, double x,
                                   int z) const {
  const SimplexStencil st = grid_.mesh.stencil(pi, grid_.interpolation);
  double val = 0.0;
  for (int k = 0; k < st.size; ++k) val += st.weight[k] * value_at(v, st.node[k], x, z);
  return val;
}

ImpulseResult DiscountedProblem::impulse(std::span<const double> v, int node, double x, int z) const {
  ImpulseResult res;
  const SimplexMesh& mesh = grid_.mesh;
  for (int b = 0; b < n_; ++b) {
    const double e = grid_.wealth.trivial() ? solve_e_prop(spec_, mesh.node(node), mesh.node(b))
                                            : solve_e(spec_, mesh.node(node), mesh.node(b), x);
    if (!(e > 0.0)) continue;
    const double val = std::log(e) + value_at(v, b, x * e, z);
    if (val > res.value) {
      res.value = val;
      res.target = b;
    }
  }
  return res;
}

DiscountedSolution solve_discounted(const DiscountedProblem& problem) {
  const auto t0 = std::chrono::steady_clock::now();
  const double beta = problem.beta();
  const SolverOptions& opt = problem.options();
  const double threshold = opt.tol * (1.0 - beta) / beta;
  const std::size_t n = problem.size();

  std::vector<double> v(n, 0.0), next(n);
  IterationReport rep;
  auto sup_diff = [&]() {
    double m = 0.0;
    for (std::size_t s = 0; s < n; ++s) m = std::max(m, std::abs(next[s] - v[s]));
    return m;
  };
  auto fail = [&](const char* phase, double delta) {
    std::ostringstream os;
    os << "value iteration (" << phase << ") hit the iteration cap " << opt.max_iterations
       << " at beta = " << beta << ": last sup-norm change " << delta << ", target " << threshold;
    throw std::runtime_error(os.str());
  };

  // Start from the value of never trading.
  double delta = std::numeric_limits<double>::infinity();
  while (delta > threshold) {
    if (rep.warmup_iterations >= opt.max_iterations) fail("no-transaction warm start", delta);
    problem.hold_step(v, next);
    delta = sup_diff();
    v.swap(next);
    ++rep.warmup_iterations;
  }
  delta = std::numeric_limits<double>::infinity();
  while (delta > threshold) {
    if (rep.iterations >= opt.max_iterations) fail("Bellman", delta);
    problem.bellman(v, next);
    delta = sup_diff();
    v.swap(next);
    ++rep.iterations;
  }

  DiscountedSolution sol;
  sol.policy.grid = problem.grid();
  sol.policy.impulse.assign(n, 0);
  sol.policy.target.assign(n, 0);
  sol.policy.beta = beta;
  std::ostringstream tag;
  tag << "beta=" << beta;
  sol.policy.tag = tag.str();
  problem.bellman(v, next, sol.policy.impulse.data(), sol.policy.target.data());
  rep.final_delta = sup_diff();
  rep.error_bound = beta / (1.0 - beta) * rep.final_delta;
  rep.converged = true;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  sol.value.grid = problem.grid();
  sol.value.beta = beta;
  sol.value.variant = problem.variant();
  sol.value.values = std::move(next);
  sol.report = rep;
  return sol;
}

DiscountedSolution solve_discounted(const MarketModel& model, const CostSpec& spec,
                                    const GridSpec& grid, double beta, ValueVariant variant,
                                    SolverOptions options) {
  const DiscountedProblem problem(model, spec, grid, beta, variant, options);
  return solve_discounted(problem);
}

double span_seminorm(const ValueFunction& v) { return v.sup() - v.inf(); }

double span_bound(const MarketModel& model, const CostSpec& spec, const SimplexMesh& mesh,
                  int n_max) {
  double h_lo = std::numeric_limits<double>::infinity();
  double h_hi = -h_lo;
  for (int z = 0; z < model.n_factors(); ++z)
    for (int a = 0; a < mesh.size(); ++a) {
      const double h = expected_log_return(model, mesh.node(a), z);
      h_lo = std::min(h_lo, h);
      h_hi = std::max(h_hi, h);
    }
  const double h_sp = h_hi - h_lo;
  const double log_e = std::log(min_diminution(spec.proportional_only(), 0.0));
  double best = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= n_max; ++n) {
    const double kappa = dobrushin(model, n);
    if (kappa < 1.0 - 1e-12) best = std::min(best, (n * h_sp - (n + 2) * log_e) / (1.0 - kappa));
  }
  if (!std::isfinite(best)) throw AssumptionError("span bound: factor chain does not mix within n_max steps");
  return best;
}

bool wealth_monotone(const ValueFunction& v, double tol) {
  const StateGrid& g = v.grid;
  for (int z = 0; z < g.n_factors; ++z)
    for (int j = 0; j + 1 < g.n_wealth(); ++j)
      for (int a = 0; a < g.n_nodes(); ++a)
        if (v.at(a, j + 1, z) < v.at(a, j, z) - tol) return false;
  return true;
}

ValueGapReport value_gap_check(const ValueFunction& fixed, const ValueFunction& prop, double tol) {
  const StateGrid& g = fixed.grid;
  if (prop.grid.n_nodes() != g.n_nodes() || prop.grid.n_factors != g.n_factors)
    throw DomainError("value_gap_check: grids differ in simplex mesh or factor count");
  if (!prop.grid.wealth.trivial()) throw DomainError("value_gap_check: proportional value must be wealth-free");
  ValueGapReport rep;
  rep.max_gap_per_wealth.assign(g.n_wealth(), -std::numeric_limits<double>::infinity());
  rep.min_gap = std::numeric_limits<double>::infinity();
  rep.max_gap = -std::numeric_limits<double>::infinity();
  for (int z = 0; z < g.n_factors; ++z)
    for (int a = 0; a < g.n_nodes(); ++a)
      for (int j = 0; j < g.n_wealth(); ++j) {
        const double gap = prop.at(a, 0, z) - fixed.at(a, j, z);
        rep.min_gap = std::min(rep.min_gap, gap);
        rep.max_gap = std::max(rep.max_gap, gap);
        rep.max_gap_per_wealth[j] = std::max(rep.max_gap_per_wealth[j], gap);
        if (gap < -tol) rep.nonnegative = false;
        if (j > 0 && gap > prop.at(a, 0, z) - fixed.at(a, j - 1, z) + tol) rep.monotone = false;
      }
  return rep;
}

}  // namespace growthopt
