#include "vbrp/star.hpp"

#include <cmath>
#include <functional>
#include <map>

#include "vbrp/coproduct.hpp"
#include "vbrp/error.hpp"

namespace vbrp {

double star_base_sum(const VolterraFunction& z, const VolterraFunction& y, double s, double u, double t, double tau,
                     int level) {
  const long long cells = 1LL << level;
  const double h = (t - u) / static_cast<double>(cells);
  double acc = 0;
  for (long long i = 0; i < cells; ++i) {
    const double a = u + h * static_cast<double>(i);
    const double b = i + 1 == cells ? t : u + h * static_cast<double>(i + 1);
    acc += z.increment(a, b, tau) * y.increment(s, u, a);
  }
  return acc;
}

StarResult star_base(const VolterraFunction& z, const VolterraFunction& y, double s, double u, double t, double tau,
                     const SewingOptions& opt) {
  if (!(s <= u && u <= t && t <= tau)) throw PreconditionError("star product needs s <= u <= t <= tau");
  if (opt.min_level < 0 || opt.max_level < opt.min_level) throw PreconditionError("invalid sewing levels");
  if (opt.max_level > 24) throw ResourceError("sewing levels above 24 are not supported");
  std::vector<double> sums;
  for (int level = opt.min_level; level <= opt.max_level; ++level)
    sums.push_back(star_base_sum(z, y, s, u, t, tau, level));
  StarResult r;
  r.sewing = accept_dyadic(sums, opt.min_level, opt);
  const double rho = std::min(z.rho(), y.rho());
  const double g = std::max(z.gamma(), y.gamma());
  const double far = std::pow(tau - s, 2 * rho);
  const double shape = tau == t ? far : std::min(std::pow(tau - t, -g) * std::pow(t - s, 2 * rho + g), far);
  if (shape > 0) r.bound_constant = std::abs(r.sewing.converged ? r.sewing.value : r.sewing.last_sum) / shape;
  return r;
}

namespace {

/// Nested star products on the grid of one lift.
///
/// `args_` holds a grid index for every node of the ambient tree; node 0 carries τ.
class TreeStar {
 public:
  using Fn = std::function<double()>;

  TreeStar(const VolterraLift& lift, const DecoratedTree& h, const MultiParamFunction& y, int base, int tau)
      : lift_(lift), ambient_(h), y_(y), base_(base), args_(h.size(), 0), times_(h.size() - 1) {
    args_[0] = tau;
  }

  double leaf() {
    for (int v = 1; v < ambient_.size(); ++v) times_[v - 1] = lift_.grid()[args_[v]];
    return y_(lift_.grid()[base_], times_);
  }

  /// Σ over the cells [a, b] of `points` of z^{t,τ}_{ba} f^{a..a} + Σ' z^{trunk,τ}_{ba} ★ (z^{pruned}_{a,lower} ★ f).
  double sum(const IdentifiedTree& t, const std::vector<int>& points, int lower, const Fn& f, int depth) {
    if (depth > ambient_.grade()) throw DiagnosticError("star recursion deeper than the tree grade");
    const int tau = args_[t.ids[0]];
    const auto& terms = reduced(t);
    double acc = 0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
      const int a = points[i], b = points[i + 1];
      for (int v = 1; v < t.tree.size(); ++v) args_[t.ids[v]] = a;
      acc += lift_.value(t.tree, a, b, tau) * f();
      if (a == lower) continue;
      std::vector<int> inner;
      for (int j = a; j <= b; ++j) inner.push_back(j);
      for (const auto& term : terms) {
        Fn phi = [&, a] { return forest(term, 0, lower, a, f, depth); };
        acc += sum(term.trunk, inner, a, phi, depth + 1);
      }
    }
    return acc;
  }

 private:
  /// Sews the pruned trees j.. of `term` over [lower, upper], each against its attachment time.
  double forest(const CutTerm& term, std::size_t j, int lower, int upper, const Fn& f, int depth) {
    if (j == term.pruned.size()) return f();
    std::vector<int> points;
    for (int i = lower; i <= upper; ++i) points.push_back(i);
    Fn rest = [&, j] { return forest(term, j + 1, lower, upper, f, depth); };
    return sum(term.pruned[j], points, lower, rest, depth + 1);
  }

  const std::vector<CutTerm>& reduced(const IdentifiedTree& t) {
    std::string key = t.tree.key();
    for (int id : t.ids) key += ',' + std::to_string(id);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, reduced_coproduct(t)).first;
    return it->second;
  }

  const VolterraLift& lift_;
  const DecoratedTree& ambient_;
  const MultiParamFunction& y_;
  int base_;
  std::vector<int> args_;
  std::vector<double> times_;
  std::map<std::string, std::vector<CutTerm>> cache_;
};

void check_star_tree(const VolterraLift& lift, const DecoratedTree& h, const MultiParamFunction& y, int s, int t,
                     int tau) {
  if (!lift.full_tables()) throw PreconditionError("star products need full lift tables");
  if (!lift.has(h)) throw PreconditionError("tree " + to_string(h) + " is not part of the lift");
  if (h.is_unit()) throw PreconditionError("star products need a non-empty tree");
  if (y.arity() != h.grade()) throw PreconditionError("y needs one upper argument per decorated node");
  if (!(0 <= s && s <= t && t <= tau && tau <= lift.cells())) throw PreconditionError("star products need s <= t <= tau");
}

}  // namespace

std::vector<int> coarsening(int lo, int hi, int level) {
  const long long parts = 1LL << level;
  std::vector<int> points;
  for (long long k = 0; k <= parts; ++k) {
    const int p = lo + static_cast<int>(k * (hi - lo) / parts);
    if (points.empty() || points.back() != p) points.push_back(p);
  }
  return points;
}

int finest_level(int cells) {
  int level = 0;
  while ((1 << level) < cells) ++level;
  return level;
}

double star_tree_sum(const VolterraLift& lift, const DecoratedTree& h, const MultiParamFunction& y, int s, int t,
                     int tau, int level) {
  check_star_tree(lift, h, y, s, t, tau);
  if (level < 0) throw PreconditionError("coarsening level must be non-negative");
  const auto root = identify(h);
  TreeStar star(lift, h, y, s, tau);
  return star.sum(root, coarsening(s, t, std::min(level, finest_level(t - s))), s, [&star] { return star.leaf(); }, 0);
}

std::vector<double> star_tree_sums(const VolterraLift& lift, const DecoratedTree& h, const MultiParamFunction& y,
                                   int s, int t, int tau) {
  check_star_tree(lift, h, y, s, t, tau);
  std::vector<double> sums;
  for (int level = 0; level <= finest_level(t - s); ++level) sums.push_back(star_tree_sum(lift, h, y, s, t, tau, level));
  return sums;
}

StarResult star_tree(const VolterraLift& lift, const DecoratedTree& h, const MultiParamFunction& y, int s, int t,
                     int tau, const StarTreeOptions& opt) {
  StarResult r;
  r.sewing = accept_dyadic(star_tree_sums(lift, h, y, s, t, tau), 0, opt.sewing);
  if (opt.bounds && s < t) {
    const double base = lift.grid()[s];
    MultiParamFunction centered(
        [&y, base](double b, std::span<const double> args) { return y(b, args) - y.diagonal(b, base); }, y.arity(),
        y.alpha(), y.gamma());
    const auto sums = star_tree_sums(lift, h, centered, s, t, tau);
    const double rho = lift.rho(), g = lift.config().gamma, n = h.grade();
    const double ts = lift.grid()[t] - base, far = std::pow(lift.grid()[tau] - base, n * rho);
    const double shape = tau == t ? far : std::min(std::pow(lift.grid()[tau] - lift.grid()[t], -g) * std::pow(ts, n * rho + g), far);
    if (shape > 0) r.bound_constant = std::abs(sums.back()) / shape;
  }
  return r;
}

}  // namespace vbrp
