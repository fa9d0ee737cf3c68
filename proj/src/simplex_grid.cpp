#include "growthopt/simplex_grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "growthopt/market_model.hpp"

namespace growthopt {

std::string to_string(Interpolation mode) {
  return mode == Interpolation::barycentric ? "barycentric" : "nearest";
}

Interpolation interpolation_from_string(const std::string& s) {
  if (s == "barycentric") return Interpolation::barycentric;
  if (s == "nearest") return Interpolation::nearest;
  throw DomainError("unknown interpolation mode '" + s + "' (expected barycentric or nearest)");
}

SimplexMesh::SimplexMesh(int dim, int order) : dim_(dim), order_(order) {
  if (dim < 1 || dim > kMaxStencil) throw DomainError("simplex mesh: dimension must be in [1, 16]");
  if (order < 1) throw DomainError("simplex mesh: order must be >= 1");

  const int rows = order + dim + 1;
  binom_.assign(static_cast<std::size_t>(rows) * (dim + 1), 0);
  for (int n = 0; n < rows; ++n) {
    binom_[n * (dim + 1)] = 1;
    for (int k = 1; k <= std::min(n, dim); ++k) {
      const long long above = n > 0 ? binom_[(n - 1) * (dim + 1) + k] : 0;
      binom_[n * (dim + 1) + k] = binom_[(n - 1) * (dim + 1) + k - 1] + above;
    }
  }
  const long long total = compositions(order, dim);
  if (total > 50'000'000) throw DomainError("simplex mesh: too many nodes");
  size_ = static_cast<int>(total);

  counts_.reserve(static_cast<std::size_t>(size_) * dim);
  std::vector<int> c(dim, 0);
  // Lexicographic enumeration: advance the rightmost free coordinate.
  auto emit = [&]() {
    counts_.insert(counts_.end(), c.begin(), c.end());
  };
  std::function<void(int, int)> rec = [&](int pos, int remaining) {
    if (pos == dim - 1) {
      c[pos] = remaining;
      emit();
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      c[pos] = v;
      rec(pos + 1, remaining - v);
    }
  };
  rec(0, order);
  coords_.resize(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) coords_[i] = static_cast<double>(counts_[i]) / order;
}

long long SimplexMesh::compositions(int total, int parts) const {
  // Number of ways to write `total` as an ordered sum of `parts` nonnegative ints.
  if (parts == 0) return total == 0 ? 1 : 0;
  return binom_[(total + parts - 1) * (dim_ + 1) + parts - 1];
}

int SimplexMesh::index_of(std::span<const int> c) const {
  long long rank = 0;
  int remaining = order_;
  for (int pos = 0; pos + 1 < dim_; ++pos) {
    const int parts_after = dim_ - pos - 1;
    for (int v = 0; v < c[pos]; ++v) rank += compositions(remaining - v, parts_after);
    remaining -= c[pos];
  }
  return static_cast<int>(rank);
}

int SimplexMesh::vertex(int i) const {
  std::array<int, kMaxStencil> c{};
  c[i] = order_;
  return index_of(std::span<const int>(c.data(), dim_));
}

SimplexStencil SimplexMesh::stencil(std::span<const double> pi, Interpolation mode) const {
  SimplexStencil st;
  if (dim_ == 1) {
    st.size = 1;
    st.node[0] = 0;
    st.weight[0] = 1.0;
    return st;
  }
  const int k = dim_ - 1;  // number of cumulative coordinates
  std::array<double, kMaxStencil> s{};
  double acc = 0.0;
  for (int j = 0; j < k; ++j) {
    acc += pi[j] * order_;
    double v = std::clamp(acc, 0.0, static_cast<double>(order_));
    if (j > 0) v = std::max(v, s[j - 1]);
    const double r = std::round(v);
    if (std::abs(v - r) < 1e-9) v = r;
    s[j] = v;
  }
  std::array<int, kMaxStencil> base{};
  std::array<double, kMaxStencil> frac{};
  std::array<int, kMaxStencil> order_idx{};
  for (int j = 0; j < k; ++j) {
    base[j] = static_cast<int>(std::floor(s[j]));
    if (base[j] >= order_) base[j] = order_;
    frac[j] = s[j] - base[j];
    order_idx[j] = j;
  }
  // Descending fractional parts; ties keep the later coordinate first so the
  // cumulative coordinates of every vertex stay nondecreasing.
  std::stable_sort(order_idx.begin(), order_idx.begin() + k, [&](int a, int b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    return a > b;
  });

  std::array<int, kMaxStencil> cum = base;
  std::array<int, kMaxStencil> c{};
  auto push = [&](double w) {
    if (!(w > 0.0)) return;
    int prev = 0;
    for (int j = 0; j < k; ++j) {
      c[j] = cum[j] - prev;
      prev = cum[j];
    }
    c[k] = order_ - prev;
    st.node[st.size] = index_of(std::span<const int>(c.data(), dim_));
    st.weight[st.size] = w;
    ++st.size;
  };
  push(1.0 - (k > 0 ? frac[order_idx[0]] : 0.0));
  for (int step = 0; step < k; ++step) {
    cum[order_idx[step]] += 1;
    const double next = step + 1 < k ? frac[order_idx[step + 1]] : 0.0;
    push(frac[order_idx[step]] - next);
  }

  if (mode == Interpolation::nearest) {
    int best = 0;
    for (int i = 1; i < st.size; ++i)
      if (st.weight[i] > st.weight[best]) best = i;
    st.node[0] = st.node[best];
    st.weight[0] = 1.0;
    st.size = 1;
  }
  return st;
}

int SimplexMesh::nearest(std::span<const double> pi) const {
  return stencil(pi, Interpolation::nearest).node[0];
}

WealthMesh::WealthMesh(double x_min, double x_max, int n) {
  if (!(x_min > 0.0) || !(x_max > x_min) || n < 2)
    throw DomainError("wealth mesh: need 0 < x_min < x_max and n_x >= 2");
  log_min_ = std::log(x_min);
  log_step_ = (std::log(x_max) - log_min_) / (n - 1);
  x_.resize(n);
  for (int j = 0; j < n; ++j) x_[j] = std::exp(log_min_ + log_step_ * j);
  x_.front() = x_min;
  x_.back() = x_max;
}

double WealthMesh::position(double log_x) const {
  if (trivial()) return 0.0;
  const double t = (log_x - log_min_) / log_step_;
  return std::clamp(t, 0.0, static_cast<double>(size() - 1));
}

std::pair<int, double> WealthMesh::stencil_at(double t) const {
  if (trivial()) return {0, 0.0};
  int j0 = static_cast<int>(std::floor(t));
  if (j0 >= size() - 1) return {size() - 2, 1.0};
  return {j0, t - j0};
}

int WealthMesh::nearest(double log_x) const {
  if (trivial()) return 0;
  return static_cast<int>(std::lround(position(log_x)));
}

StateGrid StateGrid::build(const GridSpec& spec, int n_assets, int n_factors, bool with_wealth) {
  if (n_factors < 1) throw DomainError("state grid: need at least one factor state");
  StateGrid g{SimplexMesh(n_assets, spec.simplex_order), WealthMesh(), n_factors, spec.interpolation};
  if (with_wealth) g.wealth = WealthMesh(spec.x_min, spec.x_max, spec.n_x);
  return g;
}

}  // namespace growthopt
