#include "growthopt/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace growthopt {

namespace {

constexpr double kProbTol = 1e-12;
constexpr double kSimplexTol = 1e-9;

std::vector<double> cumulative(std::span<const double> probs) {
  std::vector<double> cdf(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cdf.begin());
  if (!cdf.empty()) cdf.back() = 1.0;
  return cdf;
}

std::vector<double> mat_mul(const std::vector<double>& a, const std::vector<double>& b, int n) {
  std::vector<double> c(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const double aik = a[i * n + k];
      if (aik == 0.0) continue;
      for (int j = 0; j < n; ++j) c[i * n + j] += aik * b[k * n + j];
    }
  return c;
}

double kappa_of(const std::vector<double>& pn, int n) {
  double kappa = 0.0;
  for (int z = 0; z < n; ++z)
    for (int w = z + 1; w < n; ++w) {
      double tv = 0.0;
      for (int j = 0; j < n; ++j) tv += std::abs(pn[z * n + j] - pn[w * n + j]);
      kappa = std::max(kappa, 0.5 * tv);
    }
  return std::min(kappa, 1.0);
}

double stationarity_residual(const MarketModel& model, const std::vector<double>& theta) {
  const int n = model.n_factors();
  double res = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += theta[i] * model.transition(i, j);
    res = std::max(res, std::abs(s - theta[j]));
  }
  return res;
}

// Solves theta (P - I) = 0 with sum(theta) = 1 by Gaussian elimination.
// Returns an empty vector when the system is singular (no unique law).
std::vector<double> direct_stationary(const MarketModel& model) {
  const int n = model.n_factors();
  std::vector<double> a(static_cast<std::size_t>(n) * n);
  std::vector<double> b(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = model.transition(j, i) - (i == j ? 1.0 : 0.0);
  for (int j = 0; j < n; ++j) a[(n - 1) * n + j] = 1.0;
  b[n - 1] = 1.0;

  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) < 1e-13) return {};
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(a[piv * n + j], a[col * n + j]);
      std::swap(b[piv], b[col]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int j = r + 1; j < n; ++j) s -= a[r * n + j] * x[j];
    x[r] = s / a[r * n + r];
  }
  for (double& v : x) v = std::max(v, 0.0);
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  for (double& v : x) v /= total;
  return x;
}

std::vector<double> power_stationary(const MarketModel& model) {
  const int n = model.n_factors();
  std::vector<double> theta(n, 1.0 / n), next(n);
  constexpr long kCap = 1'000'000;
  for (long it = 0; it < kCap; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) next[j] += theta[i] * model.transition(i, j);
    // Lazy step (I + P) / 2 removes periodicity without moving the fixed point.
    double diff = 0.0;
    for (int j = 0; j < n; ++j) {
      next[j] = 0.5 * (next[j] + theta[j]);
      diff = std::max(diff, std::abs(next[j] - theta[j]));
    }
    theta.swap(next);
    if (diff < 1e-15) break;
  }
  return theta;
}

}  // namespace

MarketModel::MarketModel(int n_assets, std::vector<double> transition, std::vector<double> shock_probs,
                         std::vector<double> returns, std::vector<std::string> asset_names)
    : n_assets_(n_assets),
      transition_(std::move(transition)),
      shock_probs_(std::move(shock_probs)),
      returns_(std::move(returns)),
      asset_names_(std::move(asset_names)) {
  if (n_assets_ < 1) throw DomainError("market model needs at least one asset");
  const auto nz = static_cast<int>(std::lround(std::sqrt(static_cast<double>(transition_.size()))));
  if (nz < 1 || static_cast<std::size_t>(nz) * nz != transition_.size())
    throw DomainError("transition matrix must be square and non-empty");
  n_factors_ = nz;
  n_shocks_ = static_cast<int>(shock_probs_.size());
  if (n_shocks_ < 1) throw DomainError("shock law needs at least one atom");
  if (returns_.size() != static_cast<std::size_t>(n_factors_) * n_shocks_ * n_assets_)
    throw DomainError("returns table must have n_factors * n_shocks * n_assets entries");
  if (!asset_names_.empty() && asset_names_.size() != static_cast<std::size_t>(n_assets_))
    throw DomainError("asset name count does not match asset count");

  worst_.resize(static_cast<std::size_t>(n_factors_) * n_shocks_);
  for (int z = 0; z < n_factors_; ++z)
    for (int xi = 0; xi < n_shocks_; ++xi) {
      auto r = this->returns(z, xi);
      worst_[z * n_shocks_ + xi] = *std::min_element(r.begin(), r.end());
    }
  for (int z = 0; z < n_factors_; ++z) {
    auto cdf = cumulative(transition_row(z));
    transition_cdf_.insert(transition_cdf_.end(), cdf.begin(), cdf.end());
  }
  shock_cdf_ = cumulative(shock_probs_);
}

std::pair<int, int> MarketModel::step(int z, Rng& rng) const {
  const int z_next = rng.categorical(
      {transition_cdf_.data() + z * n_factors_, static_cast<std::size_t>(n_factors_)});
  const int xi = n_shocks_ == 1 ? 0 : rng.categorical(shock_cdf_);
  return {z_next, xi};
}

void require_simplex(std::span<const double> pi, const char* what) {
  double total = 0.0;
  for (double p : pi) {
    if (!(p >= -kSimplexTol)) {
      std::ostringstream os;
      os << what << ": negative or non-finite component " << p;
      throw DomainError(os.str());
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kSimplexTol) {
    std::ostringstream os;
    os << what << ": components sum to " << total << ", not 1";
    throw DomainError(os.str());
  }
}

double dobrushin(const MarketModel& model, int n) {
  if (n < 1) throw DomainError("dobrushin: step count must be >= 1");
  const int nz = model.n_factors();
  std::vector<double> p(model.transition_matrix().begin(), model.transition_matrix().end());
  std::vector<double> pn = p;
  for (int k = 1; k < n; ++k) pn = mat_mul(pn, p, nz);
  return kappa_of(pn, nz);
}

std::pair<int, double> mixing_horizon(const MarketModel& model, int n_max) {
  const int nz = model.n_factors();
  std::vector<double> p(model.transition_matrix().begin(), model.transition_matrix().end());
  std::vector<double> pn = p;
  double kappa = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) pn = mat_mul(pn, p, nz);
    kappa = kappa_of(pn, nz);
    if (kappa < 1.0 - 1e-12) return {n, kappa};
  }
  return {0, kappa};
}

ValidationReport validate(const MarketModel& model, int n_max) {
  ValidationReport rep;
  const int nz = model.n_factors();
  for (int z = 0; z < nz; ++z) {
    auto row = model.transition_row(z);
    const double s = std::accumulate(row.begin(), row.end(), 0.0);
    const bool nonneg = std::all_of(row.begin(), row.end(), [](double v) { return v >= 0.0; });
    if (!nonneg || std::abs(s - 1.0) > kProbTol) {
      rep.rows_stochastic = false;
      std::ostringstream os;
      os << "transition row " << z << " is not a probability vector (sum " << s << ")";
      rep.violations.push_back(os.str());
    }
  }
  {
    auto nu = model.shock_probs();
    const double s = std::accumulate(nu.begin(), nu.end(), 0.0);
    const bool nonneg = std::all_of(nu.begin(), nu.end(), [](double v) { return v >= 0.0; });
    if (!nonneg || std::abs(s - 1.0) > kProbTol) {
      rep.shocks_normalized = false;
      std::ostringstream os;
      os << "shock law is not a probability vector (sum " << s << ")";
      rep.violations.push_back(os.str());
    }
  }
  for (double r : model.returns_table()) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      rep.returns_positive = false;
      rep.violations.push_back("returns must be finite and strictly positive");
      break;
    }
  }
  if (rep.rows_stochastic) {
    auto [n, kappa] = mixing_horizon(model, n_max);
    rep.dobrushin_n = n;
    rep.kappa = kappa;
    if (n == 0) {
      rep.ergodic = false;
      std::ostringstream os;
      os << "factor chain not uniformly ergodic: kappa_n = 1 for all n <= " << n_max;
      rep.violations.push_back(os.str());
    }
  } else {
    rep.ergodic = false;
  }
  rep.ok = rep.rows_stochastic && rep.shocks_normalized && rep.returns_positive && rep.ergodic;
  return rep;
}

std::vector<double> invariant_measure(const MarketModel& model) {
  const int nz = model.n_factors();
  if (nz == 1) return {1.0};
  // A reducible chain still has stationary vectors, just not a unique one.
  if (mixing_horizon(model).first == 0)
    throw AssumptionError("factor chain not uniformly ergodic; invariant measure not unique");
  std::vector<double> theta = nz <= 64 ? direct_stationary(model) : power_stationary(model);
  if (theta.empty() || stationarity_residual(model, theta) > 1e-12) {
    // The direct solve can lose a few ulps on badly scaled chains; polish
    // with the lazy power iteration before giving up.
    theta = power_stationary(model);
  }
  if (stationarity_residual(model, theta) > 1e-12)
    throw AssumptionError("invariant measure did not converge; factor chain not ergodic");
  return theta;
}

GrowthFloor growth_floor(const MarketModel& model) {
  const auto theta = invariant_measure(model);
  GrowthFloor out;
  out.worst.resize(static_cast<std::size_t>(model.n_factors()) * model.n_shocks());
  for (int z = 0; z < model.n_factors(); ++z)
    for (int xi = 0; xi < model.n_shocks(); ++xi) {
      const double w = model.worst_return(z, xi);
      out.worst[z * model.n_shocks() + xi] = w;
      out.p_hat += theta[z] * model.shock_probs()[xi] * std::log(w);
    }
  return out;
}

double expected_log_return(const MarketModel& model, std::span<const double> pi, int z) {
  if (static_cast<int>(pi.size()) != model.n_assets())
    throw DomainError("expected_log_return: proportion vector has wrong dimension");
  require_simplex(pi, "expected_log_return");
  double h = 0.0;
  for (int zn = 0; zn < model.n_factors(); ++zn) {
    const double pz = model.transition(z, zn);
    if (pz == 0.0) continue;
    double inner = 0.0;
    for (int xi = 0; xi < model.n_shocks(); ++xi) {
      auto r = model.returns(zn, xi);
      double growth = 0.0;
      for (int i = 0; i < model.n_assets(); ++i) growth += std::max(pi[i], 0.0) * r[i];
      inner += model.shock_probs()[xi] * std::log(growth);
    }
    h += pz * inner;
  }
  return h;
}

ErgodicReport ergodic_report(const MarketModel& model, double eta, int n_max) {
  ErgodicReport rep;
  rep.invariant_measure = invariant_measure(model);
  std::tie(rep.dobrushin_n, rep.kappa) = mixing_horizon(model, n_max);
  rep.p_hat = growth_floor(model).p_hat;
  rep.eta = eta;
  rep.satisfies_A6 = eta < rep.p_hat;
  return rep;
}

}  // namespace growthopt
