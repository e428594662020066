#include "vbrp/tree_quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "vbrp/coproduct.hpp"
#include "vbrp/error.hpp"

namespace vbrp {

namespace {

constexpr int table_limit = 4097;

}  // namespace

QuadGrid::QuadGrid(const VolterraKernel& k, const DriverPath& fine, double lo, double hi, std::vector<double> extra,
                   bool tables)
    : kernel_(k) {
  if (!(lo < hi)) throw PreconditionError("quadrature grid requires lo < hi");
  if (lo < fine.time(0) || hi > fine.horizon() * (1 + 1e-14))
    throw PreconditionError("quadrature grid outside the driver's time range");
  const double snap = 1e-13 * std::max(1.0, std::abs(hi));
  std::vector<double> keep{lo, hi};
  for (double e : extra) {
    if (!(e > lo && e < hi)) throw PreconditionError("inserted grid point outside (lo, hi)");
    keep.push_back(e);
  }
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  std::vector<double> uniq = keep;
  for (double t : fine.times()) {
    if (!(t > lo && t < hi)) continue;
    auto it = std::lower_bound(keep.begin(), keep.end(), t);
    const bool near = (it != keep.end() && *it - t <= snap) || (it != keep.begin() && t - *(it - 1) <= snap);
    if (!near) uniq.push_back(t);
  }
  std::sort(uniq.begin(), uniq.end());
  count_ = static_cast<int>(uniq.size());
  std::vector<std::vector<double>> slopes(fine.dim() + 1, std::vector<double>(count_ - 1));
  for (int l = 0; l + 1 < count_; ++l) {
    const int cell = fine.cell_of(0.5 * (uniq[l] + uniq[l + 1]));
    for (int i = 0; i <= fine.dim(); ++i) slopes[i][l] = fine.slope(cell, i);
  }
  if (tables && count_ <= table_limit) {
    auto table = std::make_shared<std::vector<double>>(static_cast<std::size_t>(count_) * (count_ - 1) / 2);
    for (int j = 1; j < count_; ++j) {
      const std::size_t base = static_cast<std::size_t>(j) * (j - 1) / 2;
      for (int l = 0; l < j; ++l) (*table)[base + l] = k.integral(uniq[j], uniq[l], uniq[l + 1]);
    }
    table_ = std::move(table);
  }
  points_ = std::make_shared<const std::vector<double>>(std::move(uniq));
  slopes_ = std::make_shared<const std::vector<std::vector<double>>>(std::move(slopes));
}

QuadGrid::QuadGrid(const QuadGrid& base, int i0, int i1)
    : kernel_(base.kernel_),
      points_(base.points_),
      slopes_(base.slopes_),
      table_(base.table_),
      offset_(base.offset_ + i0),
      count_(i1 - i0 + 1) {}

QuadGrid QuadGrid::window(int i0, int i1) const {
  if (i0 < 0 || i1 >= count_ || i0 >= i1) throw PreconditionError("grid window out of range");
  return QuadGrid(*this, i0, i1);
}

int QuadGrid::index_of(double x) const {
  auto first = points_->begin() + offset_;
  auto last = first + count_;
  auto it = std::lower_bound(first, last, x);
  if (it != last && *it == x) return static_cast<int>(it - first);
  return -1;
}

double QuadGrid::cell_integral(int j, int l) const {
  if (table_) {
    const std::size_t jj = offset_ + j;
    return (*table_)[jj * (jj - 1) / 2 + offset_ + l];
  }
  return kernel_.integral(point(j), point(l), point(l + 1));
}

double QuadGrid::cell_integral_at(double tau, int l) const { return kernel_.integral(tau, point(l), point(l + 1)); }

NodeDirectives NodeDirectives::none(const DecoratedTree& h) {
  NodeDirectives d;
  d.pinned.assign(h.size(), -1);
  d.weight.assign(h.size(), nullptr);
  return d;
}

bool NodeDirectives::touches(const DecoratedTree& h, int v) const {
  for (int w : h.subtree(v))
    if (pinned[w] >= 0 || weight[w] != nullptr) return true;
  return false;
}

std::shared_ptr<const std::vector<double>> TreeQuadrature::node_function(const DecoratedTree& h, int v,
                                                                         const NodeDirectives* d) {
  const bool clean = d == nullptr || !d->touches(h, v);
  if (clean) {
    auto it = node_cache_.find(h.subtree_key(v));
    if (it != node_cache_.end()) return it->second;
  }
  const int m = grid_.size();
  auto out = std::make_shared<std::vector<double>>(m, 1.0);
  for (int c : h.children(v)) {
    auto contrib = contribution(h, c, d);
    for (int j = 0; j < m; ++j) (*out)[j] *= (*contrib)[j];
  }
  if (d && d->weight[v])
    for (int j = 0; j < m; ++j) (*out)[j] *= (*d->weight[v])[j];
  if (clean) node_cache_.emplace(h.subtree_key(v), out);
  return out;
}

std::shared_ptr<const std::vector<double>> TreeQuadrature::contribution(const DecoratedTree& h, int c,
                                                                        const NodeDirectives* d) {
  const bool clean = d == nullptr || !d->touches(h, c);
  if (clean) {
    auto it = contrib_cache_.find(h.subtree_key(c));
    if (it != contrib_cache_.end()) return it->second;
  }
  const int m = grid_.size();
  const Label lab = h.label(c);
  auto node = node_function(h, c, d);
  auto out = std::make_shared<std::vector<double>>(m, 0.0);
  const int pin = d ? d->pinned[c] : -1;
  if (pin >= 0) {
    const double base = grid_.slope(lab, pin) * (*node)[pin];
    for (int j = pin + 1; j < m; ++j) (*out)[j] = grid_.kernel_value(j, pin) * base;
  } else {
    std::vector<double> integrand(m - 1);
    for (int l = 0; l + 1 < m; ++l) integrand[l] = grid_.slope(lab, l) * (*node)[l];
    for (int j = 1; j < m; ++j) {
      double acc = 0;
      for (int l = 0; l < j; ++l) acc += grid_.cell_integral(j, l) * integrand[l];
      (*out)[j] = acc;
    }
  }
  if (clean) contrib_cache_.emplace(h.subtree_key(c), out);
  return out;
}

double TreeQuadrature::root_cell(double tau, int l) {
  if (tau != cached_tau_) {
    cached_tau_ = tau;
    const int top = grid_.index_of(tau);
    const int n = top >= 0 ? top : grid_.cells();
    tau_row_.assign(grid_.cells(), 0.0);
    for (int k = 0; k < n && grid_.point(k + 1) <= tau; ++k)
      tau_row_[k] = top >= 0 ? grid_.cell_integral(top, k) : grid_.cell_integral_at(tau, k);
  }
  return tau_row_[l];
}

double TreeQuadrature::root_factor(const DecoratedTree& h, int c, double tau, const NodeDirectives* d) {
  if (tau < grid_.hi()) throw PreconditionError("upper time must not precede the integration range");
  const Label lab = h.label(c);
  auto node = node_function(h, c, d);
  const int pin = d ? d->pinned[c] : -1;
  if (pin >= 0) return grid_.kernel()(tau, grid_.point(pin)) * grid_.slope(lab, pin) * (*node)[pin];
  double acc = 0;
  for (int l = 0; l < grid_.cells(); ++l) acc += root_cell(tau, l) * grid_.slope(lab, l) * (*node)[l];
  return acc;
}

std::vector<double> TreeQuadrature::root_prefix(const DecoratedTree& h, int c, double tau) {
  const Label lab = h.label(c);
  auto node = node_function(h, c);
  std::vector<double> out(grid_.size(), 0.0);
  for (int l = 0; l < grid_.cells(); ++l) {
    const double add = grid_.point(l + 1) <= tau ? root_cell(tau, l) * grid_.slope(lab, l) * (*node)[l] : 0.0;
    out[l + 1] = out[l] + add;
  }
  return out;
}

double TreeQuadrature::integral(const DecoratedTree& h, double tau, const NodeDirectives* d) {
  if (h.decorated_root()) throw PreconditionError("tree integrals need an undecorated root");
  double z = 1;
  for (int c : h.children(0)) z *= root_factor(h, c, tau, d);
  if (d && d->weight[0]) throw PreconditionError("the root carries no integration variable");
  return z;
}

std::vector<double> TreeQuadrature::integrals(const DecoratedTree& h, const std::vector<double>& taus,
                                              const NodeDirectives* d) {
  return integrals(std::vector<Item>{{&h, d}}, taus).front();
}

std::vector<std::vector<double>> TreeQuadrature::integrals(const std::vector<Item>& items,
                                                           const std::vector<double>& taus) {
  struct Factor {
    int item;
    Label label;
    int pin;
    std::shared_ptr<const std::vector<double>> node;
  };
  std::vector<Factor> factors;
  for (int i = 0; i < static_cast<int>(items.size()); ++i) {
    const auto& h = *items[i].tree;
    const auto* d = items[i].directives;
    if (h.decorated_root()) throw PreconditionError("tree integrals need an undecorated root");
    for (int c : h.children(0)) factors.push_back({i, h.label(c), d ? d->pinned[c] : -1, node_function(h, c, d)});
  }
  std::vector<std::vector<double>> out(items.size(), std::vector<double>(taus.size(), 1.0));
  for (std::size_t j = 0; j < taus.size(); ++j) {
    const double tau = taus[j];
    if (tau < grid_.hi()) throw PreconditionError("upper time must not precede the integration range");
    for (const auto& f : factors) {
      double acc = 0;
      if (f.pin >= 0) {
        acc = grid_.kernel()(tau, grid_.point(f.pin)) * grid_.slope(f.label, f.pin) * (*f.node)[f.pin];
      } else {
        for (int l = 0; l < grid_.cells(); ++l) acc += root_cell(tau, l) * grid_.slope(f.label, l) * (*f.node)[l];
      }
      out[f.item][j] *= acc;
    }
  }
  return out;
}

long long tree_factorial(const DecoratedTree& h) {
  long long f = 1;
  for (int v : h.decorated_nodes()) f *= static_cast<long long>(h.subtree(v).size());
  return f;
}

ConstantKernelTrees::ConstantKernelTrees(const QuadGrid& grid, double constant) : grid_(grid), constant_(constant) {
  close_over(DecoratedTree());
}

void ConstantKernelTrees::close_over(const DecoratedTree& h) {
  if (index_.count(h.key())) return;
  const int id = static_cast<int>(trees_.size());
  index_.emplace(h.key(), id);
  trees_.push_back(h);
  terms_.emplace_back();
  dirty_ = true;
  if (h.is_unit()) return;
  std::vector<Term> terms;
  for (const auto& term : coproduct(h)) {
    // the empty cut refers to h itself, the full cut to h again on the lower side
    close_over(term.trunk.tree);
    Term t{index_.at(term.trunk.tree.key()), {}};
    for (const auto& p : term.pruned) {
      close_over(p.tree);
      t.pruned.push_back(index_.at(p.tree.key()));
    }
    terms.push_back(std::move(t));
  }
  terms_[id] = std::move(terms);
}

void ConstantKernelTrees::run() {
  const int n = static_cast<int>(trees_.size());
  const int m = grid_.size();
  prefix_.assign(n, std::vector<double>(m, 0.0));
  std::vector<double> cell(n), now(n), next(n);
  std::vector<double> fact(n);
  std::vector<int> grade(n);
  for (int a = 0; a < n; ++a) {
    fact[a] = static_cast<double>(tree_factorial(trees_[a]));
    grade[a] = trees_[a].grade();
  }
  for (int a = 0; a < n; ++a) now[a] = trees_[a].is_unit() ? 1.0 : 0.0;
  for (int a = 0; a < n; ++a) prefix_[a][0] = now[a];
  for (int l = 0; l < grid_.cells(); ++l) {
    const double len = grid_.point(l + 1) - grid_.point(l);
    for (int a = 0; a < n; ++a) {
      double v = std::pow(constant_ * len, grade[a]) / fact[a];
      for (int node : trees_[a].decorated_nodes()) v *= grid_.slope(trees_[a].label(node), l);
      cell[a] = v;
    }
    for (int a = 0; a < n; ++a) {
      if (trees_[a].is_unit()) {
        next[a] = 1.0;
        continue;
      }
      double acc = 0;
      for (const auto& t : terms_[a]) {
        double v = cell[t.trunk];
        for (int p : t.pruned) v *= now[p];
        acc += v;
      }
      next[a] = acc;
    }
    std::swap(now, next);
    for (int a = 0; a < n; ++a) prefix_[a][l + 1] = now[a];
  }
  dirty_ = false;
}

const std::vector<double>& ConstantKernelTrees::prefix(const DecoratedTree& h) {
  if (h.decorated_root()) throw PreconditionError("tree integrals need an undecorated root");
  close_over(h);
  if (dirty_) run();
  return prefix_[index_.at(h.key())];
}

}  // namespace vbrp
