#include "vbrp/controlled.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "vbrp/coproduct.hpp"
#include "vbrp/error.hpp"
#include "vbrp/star.hpp"

namespace vbrp {

int truncation_level(double alpha, double gamma) {
  const double rho = alpha - gamma;
  if (!(rho > 0)) throw PreconditionError("truncation needs alpha > gamma");
  return static_cast<int>(std::floor(1.0 / rho + 1e-12));
}

int truncation_level_by_alpha(double alpha) {
  if (!(alpha > 0)) throw PreconditionError("truncation needs alpha > 0");
  return static_cast<int>(std::floor(1.0 / alpha + 1e-12));
}

namespace {

long long factorial(int m) {
  long long r = 1;
  for (int k = 2; k <= m; ++k) r *= k;
  return r;
}

int grid_index(const VolterraLift& lift, double x) {
  const int i = lift.driver().index_of(x);
  if (i < 0) throw PreconditionError("controlled path values are only tabulated on grid points");
  return i;
}

std::vector<int> sample_points(int cells, int samples) {
  const int k = std::max(2, std::min(samples, cells + 1));
  std::vector<int> out;
  for (int j = 0; j < k; ++j) {
    const int p = static_cast<int>(std::lround(static_cast<double>(j) * cells / (k - 1)));
    if (out.empty() || out.back() != p) out.push_back(p);
  }
  return out;
}

std::vector<double> times_of(const VolterraLift& lift, const std::vector<int>& points) {
  std::vector<double> out;
  for (int p : points) out.push_back(lift.grid()[p]);
  return out;
}

}  // namespace

ChainRuleTerm chain_rule_term(const DecoratedTree& h) {
  if (h.decorated_root()) throw PreconditionError("chain rule terms need an undecorated root");
  ChainRuleTerm term;
  term.factors = planted_factors(h);
  term.order = static_cast<int>(term.factors.size());
  double product = 1;
  std::map<std::string, int> multiplicity;
  for (const auto& f : term.factors) {
    product *= static_cast<double>(symmetry_factor(f.tree));
    ++multiplicity[f.tree.key()];
  }
  term.coefficient = product / static_cast<double>(symmetry_factor(h));
  term.slot_coefficient = 1.0 / static_cast<double>(factorial(term.order));
  term.orderings = factorial(term.order);
  for (const auto& [key, m] : multiplicity) term.orderings /= factorial(m);
  return term;
}

ChainRule::ChainRule(std::vector<DecoratedTree> trees) : trees_(std::move(trees)) {
  if (trees_.empty() || !trees_[0].is_unit()) throw PreconditionError("chain rule trees must start with the unit");
  std::map<std::string, int> index;
  for (std::size_t k = 0; k < trees_.size(); ++k) index[trees_[k].key()] = static_cast<int>(k);
  entries_.resize(trees_.size());
  for (std::size_t k = 1; k < trees_.size(); ++k) {
    const auto term = chain_rule_term(trees_[k]);
    Entry& e = entries_[k];
    e.order = term.order;
    e.coefficient = term.coefficient;
    for (const auto& f : term.factors) {
      auto it = index.find(f.tree.key());
      if (it == index.end()) throw PreconditionError("planted factor " + to_string(f.tree) + " is not an index tree");
      e.factors.push_back(it->second);
    }
    max_order_ = std::max(max_order_, e.order);
  }
}

std::vector<double> ChainRule::apply(const VectorField& f, std::span<const double> values) const {
  if (values.size() != trees_.size()) throw PreconditionError("one value per index tree is required");
  if (f.order() < max_order_)
    throw PreconditionError("vector field " + f.name() + " needs derivatives up to order " + std::to_string(max_order_));
  std::vector<double> out(trees_.size(), 0.0);
  out[0] = f(values[0]);
  for (std::size_t k = 1; k < trees_.size(); ++k) {
    const Entry& e = entries_[k];
    double product = e.coefficient;
    for (int j : e.factors) product *= values[j];
    if (product != 0) out[k] = product * f.derivative(e.order, values[0]);
  }
  return out;
}

ControlledPath::ControlledPath(const VolterraLift& lift, int level) : lift_(&lift), level_(level) {
  if (level < 1) throw PreconditionError("controlled paths need level >= 1");
  trees_ = enumerate_trees(level - 1, lift.driver().dim());
}

ControlledPath ControlledPath::constant(const VolterraLift& lift, int level, double c) {
  ControlledPath y(lift, level);
  y.set(DecoratedTree(), MultiParamFunction::constant(c, 1, lift.config().alpha, lift.config().gamma));
  return y;
}

ControlledPath ControlledPath::canonical(const VolterraLift& lift, int level, Label i) {
  if (level < 2) throw PreconditionError("the canonical controlled path needs level >= 2");
  if (!lift.full_tables()) throw PreconditionError("the canonical controlled path needs full lift tables");
  const DecoratedTree e = planted_dot(i);
  if (!lift.has(e)) throw PreconditionError("label " + std::to_string(i) + " is not part of the lift");
  ControlledPath y(lift, level);
  const VolterraLift* source = &lift;
  y.set(DecoratedTree(), MultiParamFunction(
                             [source, e](double s, std::span<const double> r) {
                               const int b = grid_index(*source, s), c = grid_index(*source, r[0]);
                               if (b > c) throw PreconditionError("the canonical path needs s <= tau");
                               return b == 0 ? 0.0 : source->value(e, 0, b, c);
                             },
                             1, lift.config().alpha, lift.config().gamma));
  y.set(e, MultiParamFunction::constant(1.0, 2, lift.config().alpha, lift.config().gamma));
  return y;
}

void ControlledPath::set(const DecoratedTree& h, MultiParamFunction y) {
  if (std::find(trees_.begin(), trees_.end(), h) == trees_.end())
    throw PreconditionError("tree " + to_string(h) + " is not an index tree of this controlled path");
  if (y.arity() != h.grade() + 1) throw PreconditionError("component " + to_string(h) + " needs |h| + 1 arguments");
  components_.insert_or_assign(h.key(), std::move(y));
}

bool ControlledPath::has(const DecoratedTree& h) const { return components_.count(h.key()) > 0; }

const MultiParamFunction& ControlledPath::component(const DecoratedTree& h) const {
  auto it = components_.find(h.key());
  if (it == components_.end()) throw PreconditionError("controlled path has no component " + to_string(h));
  return it->second;
}

double ControlledPath::operator()(const DecoratedTree& h, double s, std::span<const double> args) const {
  auto it = components_.find(h.key());
  return it == components_.end() ? 0.0 : it->second(s, args);
}

double ControlledPath::diagonal(const DecoratedTree& h, double s, double u) const {
  auto it = components_.find(h.key());
  return it == components_.end() ? 0.0 : it->second.diagonal(s, u);
}

bool ControlledPath::is_hat() const {
  for (const auto& h : trees_)
    if (!h.is_unit() && !h.is_planted() && has(h)) return false;
  return true;
}

ControlledPath ControlledPath::scaled(double lambda) const {
  ControlledPath out(*lift_, level_);
  for (const auto& h : trees_)
    if (has(h)) {
      const auto& c = component(h);
      out.set(h, MultiParamFunction([c, lambda](double s, std::span<const double> r) { return lambda * c(s, r); },
                                    c.arity(), c.alpha(), c.gamma()));
    }
  return out;
}

ControlledPath operator+(const ControlledPath& a, const ControlledPath& b) {
  if (a.lift_ != b.lift_ || a.level_ != b.level_) throw PreconditionError("sums need paths over the same lift and level");
  ControlledPath out(*a.lift_, a.level_);
  for (const auto& h : a.trees_) {
    if (a.has(h) && b.has(h)) {
      const auto &x = a.component(h), &y = b.component(h);
      out.set(h, MultiParamFunction([x, y](double s, std::span<const double> r) { return x(s, r) + y(s, r); },
                                    x.arity(), std::min(x.alpha(), y.alpha()), std::max(x.gamma(), y.gamma())));
    } else if (a.has(h)) {
      out.set(h, a.component(h));
    } else if (b.has(h)) {
      out.set(h, b.component(h));
    }
  }
  return out;
}

std::size_t RemainderReport::index(int i, int j, int c) const {
  const int k = static_cast<int>(points.size());
  if (!(0 <= i && i < j && j <= c && c < k)) throw PreconditionError("remainder positions need i < j <= c");
  return (static_cast<std::size_t>(i) * k + j) * k + c;
}

std::string RemainderReport::to_csv() const {
  std::ostringstream out;
  out << "tree,s,t,tau,value\n";
  const int k = static_cast<int>(points.size());
  for (const auto& table : tables)
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        for (int c = j; c < k; ++c)
          out << to_string(table.tree) << ',' << points[i] << ',' << points[j] << ',' << points[c] << ','
              << format_double(table.values[(static_cast<std::size_t>(i) * k + j) * k + c]) << '\n';
  return out.str();
}

namespace {

/// One product z^ρ ★ y^σ contributing to R^h: the merged pruned forest and the σ node of each of its nodes.
struct RemainderTerm {
  DecoratedTree sigma;
  DecoratedTree pruned;
  std::vector<int> sigma_node;
};

std::vector<RemainderTerm> remainder_terms(const ControlledPath& y, const DecoratedTree& h) {
  std::vector<RemainderTerm> out;
  for (const auto& sigma : y.trees()) {
    if (sigma.is_unit() || !y.has(sigma) || sigma.grade() <= h.grade()) continue;
    if (h.is_unit()) {
      RemainderTerm t{sigma, sigma, {}};
      for (int v = 0; v < sigma.size(); ++v) t.sigma_node.push_back(v);
      out.push_back(std::move(t));
      continue;
    }
    for (const auto& term : reduced_coproduct(sigma)) {
      if (!(term.trunk.tree == h)) continue;
      std::vector<int> parent{-1}, ambient{-1};
      std::vector<Label> label{no_label};
      for (const auto& p : term.pruned) {
        const int offset = static_cast<int>(parent.size()) - 1;
        for (int v = 1; v < p.tree.size(); ++v) {
          parent.push_back(p.tree.parent(v) == 0 ? 0 : p.tree.parent(v) + offset);
          label.push_back(p.tree.label(v));
          ambient.push_back(p.ids[v]);
        }
      }
      std::vector<int> new_index;
      RemainderTerm t{sigma, DecoratedTree::from_parents(parent, label, &new_index), {}};
      t.sigma_node.assign(parent.size(), -1);
      for (std::size_t v = 0; v < parent.size(); ++v) t.sigma_node[new_index[v]] = ambient[v];
      out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace

RemainderReport remainders(const ControlledPath& y, int samples) {
  const VolterraLift& lift = y.lift();
  if (!lift.full_tables()) throw PreconditionError("remainders need full lift tables");
  RemainderReport report;
  report.points = sample_points(lift.cells(), samples);
  const int k = static_cast<int>(report.points.size());
  const auto times = times_of(lift, report.points);
  const double alpha = lift.config().alpha, gamma = lift.config().gamma;
  for (const auto& h : y.trees()) {
    const auto terms = remainder_terms(y, h);
    for (const auto& term : terms)
      if (!lift.has(term.pruned)) throw PreconditionError("lift component " + to_string(term.pruned) + " is missing");
    RemainderTable table;
    table.tree = h;
    table.alpha = (y.level() - h.grade()) * alpha;
    table.gamma = (y.level() - h.grade()) * gamma;
    table.values.assign(static_cast<std::size_t>(k) * k * k, 0.0);
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        for (int c = j; c < k; ++c) {
          const double tau = times[c];
          double r = y.diagonal(h, times[j], tau) - y.diagonal(h, times[i], tau);
          for (const auto& term : terms) {
            const auto& ys = y.component(term.sigma);
            const auto& map = term.sigma_node;
            MultiParamFunction curried(
                [&ys, &map, tau](double base, std::span<const double> args) {
                  std::vector<double> full(static_cast<std::size_t>(ys.arity()), tau);
                  for (std::size_t v = 1; v < map.size(); ++v) full[map[v]] = args[v - 1];
                  return ys(base, full);
                },
                term.pruned.grade(), ys.alpha(), ys.gamma());
            r -= star_tree_sum(lift, term.pruned, curried, report.points[i], report.points[j], report.points[c], 64);
          }
          table.values[report.index(i, j, c)] = r;
        }
    std::map<double, int> position;
    for (int p = 0; p < k; ++p) position[times[p]] = p;
    table.norm = empirical_increment_norm(
        [&](double s, double t, double tau) { return table.values[report.index(position[s], position[t], position[tau])]; },
        times, table.alpha, table.gamma);
    report.total_norm += table.norm;
    report.tables.push_back(std::move(table));
  }
  return report;
}

double lift_norm(const VolterraLift& lift, int samples) {
  if (!lift.full_tables()) throw PreconditionError("lift norms need full tables");
  const auto points = sample_points(lift.cells(), samples);
  const auto times = times_of(lift, points);
  std::map<double, int> index;
  for (std::size_t p = 0; p < points.size(); ++p) index[times[p]] = points[p];
  double total = 0;
  for (const auto& h : lift.trees()) {
    if (h.is_unit()) continue;
    total += empirical_increment_norm(
        [&](double s, double t, double tau) { return lift.value(h, index[s], index[t], index[tau]); }, times,
        h.grade() * lift.rho() + lift.config().gamma, lift.config().gamma);
  }
  return total;
}

double controlled_norm(const ControlledPath& y, const RemainderReport& r, const NormLattice& lattice) {
  const auto times = times_of(y.lift(), r.points);
  double total = r.total_norm;
  for (const auto& h : y.trees()) {
    if (!y.has(h)) continue;
    const auto& c = y.component(h);
    total += std::abs(c.diagonal(0.0, 0.0));
    if (h.is_unit())
      total += empirical_increment_norm(
          [&c](double s, double t, double tau) { return c.diagonal(t, tau) - c.diagonal(s, tau); }, times, c.alpha(),
          c.gamma());
    else
      total += empirical_norm_multi(c, times, lattice);
  }
  return total;
}

double composition_bound_shape(double base, double lift_norm, int p) {
  if (p < 1) throw PreconditionError("composition bounds need p >= 1");
  return std::pow(1 + lift_norm, p - 1) * std::max(base, std::pow(base, p - 1));
}

double rough_cell_germ(const ControlledPath& y, Label i, int a, int tau) {
  const VolterraLift& lift = y.lift();
  if (!(0 <= a && a < tau && tau <= lift.cells())) throw PreconditionError("cell germs need a < tau");
  const double ta = lift.grid()[a];
  double acc = 0;
  for (const auto& h : y.trees()) {
    if (!y.has(h)) continue;
    const DecoratedTree g = graft(i, h);
    if (!lift.has(g)) throw PreconditionError("grafted component " + to_string(g) + " is missing from the lift");
    acc += lift.cell(g, a, tau) * y.diagonal(h, ta, ta);
  }
  return acc;
}

RoughIntegral rough_integral(const ControlledPath& y, Label i, int s, int t, int tau, const SewingOptions& opt) {
  const VolterraLift& lift = y.lift();
  if (!lift.full_tables()) throw PreconditionError("rough integrals need full lift tables");
  if (!(0 <= s && s <= t && t <= tau && tau <= lift.cells())) throw PreconditionError("rough integrals need s <= t <= tau");

  struct Grafted {
    DecoratedTree tree;
    std::vector<int> ids;
    const MultiParamFunction* y;
  };
  std::vector<Grafted> grafted;
  for (const auto& h : y.trees()) {
    if (!y.has(h)) continue;
    auto g = graft_identified(i, h);
    if (!lift.has(g.tree)) throw PreconditionError("grafted component " + to_string(g.tree) + " is missing from the lift");
    grafted.push_back({g.tree, g.ids, &y.component(h)});
  }

  std::vector<double> sums;
  for (int level = 0; level <= finest_level(t - s); ++level) {
    const auto points = coarsening(s, t, level);
    double acc = 0;
    for (std::size_t c = 0; c + 1 < points.size(); ++c)
      for (const auto& g : grafted) {
        const auto& yh = *g.y;
        const auto& ids = g.ids;
        MultiParamFunction curried(
            [&yh, &ids](double base, std::span<const double> args) {
              std::vector<double> full(static_cast<std::size_t>(yh.arity()), 0.0);
              for (std::size_t v = 1; v < ids.size(); ++v) full[ids[v]] = args[v - 1];
              return yh(base, full);
            },
            g.tree.grade(), yh.alpha(), yh.gamma());
        acc += star_tree_sum(lift, g.tree, curried, points[c], points[c + 1], tau, 64);
      }
    sums.push_back(acc);
  }
  SewingOptions sew = opt;
  sew.min_level = 0;
  RoughIntegral out{accept_dyadic(sums, 0, sew), ControlledPath(lift, y.level())};

  const int m = lift.cells();
  auto table = std::make_shared<std::vector<double>>(static_cast<std::size_t>(m + 1) * (m + 1), 0.0);
  for (int c = 1; c <= m; ++c)
    for (int b = 1; b <= c; ++b)
      (*table)[static_cast<std::size_t>(b) * (m + 1) + c] =
          (*table)[static_cast<std::size_t>(b - 1) * (m + 1) + c] + rough_cell_germ(y, i, b - 1, c);
  const VolterraLift* source = &lift;
  out.path.set(DecoratedTree(), MultiParamFunction(
                                    [source, table, m](double base, std::span<const double> r) {
                                      const int b = grid_index(*source, base), c = grid_index(*source, r[0]);
                                      if (b > c) throw PreconditionError("integrated paths need t <= tau");
                                      return (*table)[static_cast<std::size_t>(b) * (m + 1) + c];
                                    },
                                    1, lift.config().alpha, lift.config().gamma));
  for (const auto& g : grafted) {
    if (g.tree.grade() >= y.level()) continue;
    const MultiParamFunction yh = *g.y;
    const std::vector<int> ids = g.ids;
    out.path.set(g.tree, MultiParamFunction(
                             [yh, ids](double base, std::span<const double> r) {
                               std::vector<double> full(static_cast<std::size_t>(yh.arity()), 0.0);
                               for (std::size_t v = 1; v < ids.size(); ++v) full[ids[v]] = r[v];
                               return yh(base, full);
                             },
                             g.tree.grade() + 1, yh.alpha(), yh.gamma()));
  }
  return out;
}

ControlledPath compose(const VectorField& f, const ControlledPath& y) {
  if (!y.is_hat()) throw PreconditionError("composition needs a controlled path in the hat space");
  if (!y.has(DecoratedTree())) throw PreconditionError("composition needs the path component");
  const auto& base = y.component(DecoratedTree());
  ControlledPath out(y.lift(), y.level());
  out.set(DecoratedTree(), MultiParamFunction([f, base](double s, std::span<const double> r) { return f(base(s, r)); },
                                              1, base.alpha(), base.gamma()));
  for (const auto& h : y.trees()) {
    if (h.is_unit()) continue;
    auto term = chain_rule_term(h);
    bool present = true;
    for (const auto& factor : term.factors) present = present && y.has(factor.tree);
    if (!present) continue;
    if (f.order() < term.order)
      throw PreconditionError("vector field " + f.name() + " needs derivatives up to order " + std::to_string(term.order));
    std::vector<MultiParamFunction> parts;
    std::vector<std::vector<int>> ids;
    for (const auto& factor : term.factors) {
      parts.push_back(y.component(factor.tree));
      ids.push_back(factor.ids);
    }
    const double coefficient = term.coefficient;
    const int order = term.order;
    out.set(h, MultiParamFunction(
                   [f, base, parts, ids, coefficient, order](double s, std::span<const double> r) {
                     double product = coefficient;
                     std::vector<double> args;
                     for (std::size_t k = 0; k < parts.size(); ++k) {
                       args.assign(static_cast<std::size_t>(parts[k].arity()), r[0]);
                       for (std::size_t v = 1; v < ids[k].size(); ++v) args[v] = r[ids[k][v]];
                       product *= parts[k](s, args);
                     }
                     return product * f.derivative(order, base(s, r.subspan(0, 1)));
                   },
                   h.grade() + 1, base.alpha(), base.gamma()));
  }
  return out;
}

}  // namespace vbrp
