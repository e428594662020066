#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vbrp/driver.hpp"
#include "vbrp/kernel.hpp"
#include "vbrp/trees.hpp"

namespace vbrp {

/// Points g_0 < ... < g_M of a piecewise-linear driver with per-cell slopes and
/// exact kernel cell integrals K(j, l) = ∫_{g_l}^{g_{l+1}} k(g_j, r) dr for l < j.
class QuadGrid {
 public:
  /// Points of `fine` strictly inside (lo, hi), together with lo, hi and `extra`.
  /// Without `tables` the cell integrals K(j, l) are recomputed on every request.
  QuadGrid(const VolterraKernel& k, const DriverPath& fine, double lo, double hi, std::vector<double> extra = {},
           bool tables = true);

  int size() const { return count_; }
  int cells() const { return count_ - 1; }
  double point(int j) const { return (*points_)[offset_ + j]; }
  double lo() const { return point(0); }
  double hi() const { return point(count_ - 1); }
  int dim() const { return static_cast<int>(slopes_->size()) - 1; }
  double slope(Label i, int l) const { return (*slopes_)[i][offset_ + l]; }
  /// Index of an exact grid point, or -1.
  int index_of(double x) const;

  double cell_integral(int j, int l) const;
  /// ∫ over cell l of k(tau, r) dr for an arbitrary tau >= g_{l+1}.
  double cell_integral_at(double tau, int l) const;
  /// Pointwise kernel value k(g_j, g_l), j > l.
  double kernel_value(int j, int l) const { return kernel_(point(j), point(l)); }
  const VolterraKernel& kernel() const { return kernel_; }

  /// Sub-grid on points i0..i1 sharing the tables.
  QuadGrid window(int i0, int i1) const;

 private:
  QuadGrid(const QuadGrid&, int i0, int i1);
  VolterraKernel kernel_;
  std::shared_ptr<const std::vector<double>> points_;
  std::shared_ptr<const std::vector<std::vector<double>>> slopes_;
  std::shared_ptr<const std::vector<double>> table_;
  int offset_ = 0;
  int count_ = 0;
};

/// Per-node instructions for one evaluation. Indices are canonical nodes of the tree.
struct NodeDirectives {
  /// Grid index at which the node variable is held fixed, or -1.
  std::vector<int> pinned;
  /// Factor multiplying the node's integrand, sampled at grid points, or null.
  std::vector<const std::vector<double>*> weight;

  static NodeDirectives none(const DecoratedTree& h);
  bool touches(const DecoratedTree& h, int v) const;
};

/// Left-point product integration of tree integrals over one grid.
///
/// For a decorated node v the node function is H_v(x) = w_v(x) ∏_c C_c(x), where a
/// free child contributes C_c(g_j) = Σ_{l<j} K(j, l) q̇_l H_c(g_l) and a pinned child
/// at r contributes 1{g_j > r} k(g_j, r) q̇(r) H_c(r). Root children integrate against
/// k(τ, ·) over the whole grid. Results for undirected subtrees are memoized by key.
class TreeQuadrature {
 public:
  explicit TreeQuadrature(QuadGrid grid) : grid_(std::move(grid)) {}

  const QuadGrid& grid() const { return grid_; }

  /// H_v at every grid point.
  std::shared_ptr<const std::vector<double>> node_function(const DecoratedTree& h, int v,
                                                           const NodeDirectives* d = nullptr);
  /// Value of the root child c integrated against k(tau, ·) over the grid.
  double root_factor(const DecoratedTree& h, int c, double tau, const NodeDirectives* d = nullptr);
  /// Partial sums of root_factor up to each grid point: out[j] covers [g_0, g_j].
  /// Cells above tau contribute nothing, so tau may lie inside the grid.
  std::vector<double> root_prefix(const DecoratedTree& h, int c, double tau);
  /// z^{h,tau} over [g_0, g_M].
  double integral(const DecoratedTree& h, double tau, const NodeDirectives* d = nullptr);
  /// Same for several upper times.
  std::vector<double> integrals(const DecoratedTree& h, const std::vector<double>& taus,
                                const NodeDirectives* d = nullptr);

  struct Item {
    const DecoratedTree* tree;
    const NodeDirectives* directives;
  };
  /// out[i][j] = integral(items[i], taus[j]); node functions are computed once per item
  /// and each upper time's kernel row once for all items.
  std::vector<std::vector<double>> integrals(const std::vector<Item>& items, const std::vector<double>& taus);

 private:
  std::shared_ptr<const std::vector<double>> contribution(const DecoratedTree& h, int c, const NodeDirectives* d);
  double root_cell(double tau, int l);

  QuadGrid grid_;
  std::map<std::string, std::shared_ptr<const std::vector<double>>> node_cache_;
  std::map<std::string, std::shared_ptr<const std::vector<double>>> contrib_cache_;
  double cached_tau_ = -1;
  std::vector<double> tau_row_;
};

/// ∏ over decorated nodes of the size of the subtree they root.
long long tree_factorial(const DecoratedTree& h);

/// Exact tree integrals for a constant kernel on a piecewise-linear driver.
///
/// Single-cell values are c^{|h|} ∏ q̇ Δ^{|h|} / h!, and cells are combined by the
/// classical Chen relation, since convolution against a constant kernel is a product.
class ConstantKernelTrees {
 public:
  ConstantKernelTrees(const QuadGrid& grid, double constant);
  /// z^h over [g_0, g_j] for every j.
  const std::vector<double>& prefix(const DecoratedTree& h);
  double value(const DecoratedTree& h) { return prefix(h).back(); }

 private:
  void close_over(const DecoratedTree& h);
  void run();

  QuadGrid grid_;
  double constant_;
  std::map<std::string, int> index_;
  std::vector<DecoratedTree> trees_;
  struct Term {
    int trunk;
    std::vector<int> pruned;
  };
  std::vector<std::vector<Term>> terms_;
  std::vector<std::vector<double>> prefix_;
  bool dirty_ = true;
};

}  // namespace vbrp
