#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace growthopt {

enum class Interpolation {
  barycentric,  // piecewise-linear on the Freudenthal triangulation of the mesh
  nearest,      // value of the heaviest barycentric vertex
};

std::string to_string(Interpolation mode);
Interpolation interpolation_from_string(const std::string& s);

inline constexpr int kMaxStencil = 16;

/// Up to d mesh vertices with nonnegative weights summing to one.
struct SimplexStencil {
  int size = 0;
  std::array<int, kMaxStencil> node{};
  std::array<double, kMaxStencil> weight{};
};

/// All points of the unit simplex in R^d whose coordinates are multiples of
/// 1/m. Nodes are ordered lexicographically by their integer counts.
class SimplexMesh {
 public:
  SimplexMesh() : SimplexMesh(1, 1) {}
  SimplexMesh(int dim, int order);

  int dim() const noexcept { return dim_; }
  int order() const noexcept { return order_; }
  int size() const noexcept { return size_; }

  std::span<const double> node(int k) const {
    return {coords_.data() + static_cast<std::size_t>(k) * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const int> counts(int k) const {
    return {counts_.data() + static_cast<std::size_t>(k) * dim_, static_cast<std::size_t>(dim_)};
  }

  /// Index of the node with the given integer counts (must sum to m).
  int index_of(std::span<const int> counts) const;
  /// Index of the unit vector e_i.
  int vertex(int i) const;

  /// Interpolation stencil for a simplex point; exact mesh nodes yield a
  /// single vertex. Cumulative coordinates are clamped into the simplex, so
  /// callers that need validation use require_simplex first.
  SimplexStencil stencil(std::span<const double> pi, Interpolation mode) const;
  /// Node nearest to pi in the barycentric sense (heaviest stencil vertex).
  int nearest(std::span<const double> pi) const;

 private:
  int dim_;
  int order_;
  int size_;
  std::vector<int> counts_;
  std::vector<double> coords_;
  std::vector<long long> binom_;  // (order + dim) x dim table

  long long compositions(int total, int parts) const;
};

/// Geometric wealth mesh x_min * r^j, j = 0..n-1; a single node at 1 stands
/// for "no wealth axis".
class WealthMesh {
 public:
  WealthMesh() = default;
  WealthMesh(double x_min, double x_max, int n);

  int size() const noexcept { return static_cast<int>(x_.size()); }
  bool trivial() const noexcept { return x_.size() <= 1; }
  double x(int j) const { return x_[j]; }
  const std::vector<double>& nodes() const noexcept { return x_; }
  double x_min() const noexcept { return x_.front(); }
  double x_max() const noexcept { return x_.back(); }
  double log_step() const noexcept { return log_step_; }

  /// Fractional grid coordinate of log-wealth, clamped to [0, n-1].
  double position(double log_x) const;
  /// Linear stencil in log-wealth: (j0, w) meaning (1-w) at j0, w at j0+1.
  std::pair<int, double> stencil_at(double position) const;
  /// Nearest node to log-wealth.
  int nearest(double log_x) const;

 private:
  std::vector<double> x_{1.0};
  double log_min_ = 0.0;
  double log_step_ = 1.0;
};

struct GridSpec {
  int simplex_order = 8;
  double x_min = 1e-3;
  double x_max = 1e4;
  int n_x = 16;
  Interpolation interpolation = Interpolation::barycentric;
};

/// Discretized state space: simplex mesh x wealth mesh x factor states.
/// Flat index ((z * n_x) + j) * n_nodes + node.
struct StateGrid {
  SimplexMesh mesh;
  WealthMesh wealth;
  int n_factors = 1;
  Interpolation interpolation = Interpolation::barycentric;

  int n_nodes() const noexcept { return mesh.size(); }
  int n_wealth() const noexcept { return wealth.size(); }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(n_nodes()) * n_wealth() * n_factors;
  }
  std::size_t index(int node, int j, int z) const noexcept {
    return (static_cast<std::size_t>(z) * n_wealth() + j) * n_nodes() + node;
  }

  /// Grid for a model with `n_assets` assets and `n_factors` factor states;
  /// the wealth axis is dropped when `with_wealth` is false.
  static StateGrid build(const GridSpec& spec, int n_assets, int n_factors, bool with_wealth);
};

}  // namespace growthopt
