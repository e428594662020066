#include "vbrp/signature.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "vbrp/coproduct.hpp"
#include "vbrp/error.hpp"
#include "vbrp/parallel.hpp"
#include "vbrp/tree_quadrature.hpp"

namespace vbrp {

namespace {

void check_times(double s, double t, double tau) {
  if (!(s < t) || !(t <= tau)) throw PreconditionError("iterated integrals require s < t <= tau");
}

void check_tree(const DecoratedTree& h, const DriverPath& q) {
  if (h.decorated_root()) throw PreconditionError("iterated integrals are indexed by trees with an undecorated root");
  if (h.max_label() > q.dim()) throw PreconditionError("tree label exceeds the driver dimension");
}

DriverPath refine_driver(const DriverPath& q, int refine) {
  if (refine < 0) throw PreconditionError("refinement level must be >= 0");
  if (refine > max_refine) throw ResourceError("refinement cap exceeded");
  return q.refined(refine);
}

void check_size(const DriverPath& fine, double s, double t) {
  const int cells = fine.cell_of(t) - fine.cell_of(s) + 1;
  if (cells > max_quadrature_cells) throw ResourceError("quadrature grid exceeds the sub-cell cap");
}

bool use_exact(const VolterraKernel& k, const QuadratureOptions& opt) { return opt.exact_constant && k.is_constant(); }

double constant_value(const VolterraKernel& k) { return k(1.0, 0.0); }

std::vector<double> sample_weight(const NodeWeight& w, const QuadGrid& g) {
  std::vector<double> out(g.size());
  for (int j = 0; j < g.size(); ++j) out[j] = w(g.point(j));
  return out;
}

std::vector<double> grid_points(const QuadGrid& g) {
  std::vector<double> out(g.size());
  for (int j = 0; j < g.size(); ++j) out[j] = g.point(j);
  return out;
}

/// Weighted integrals of every term of a coproduct, with the lower factors evaluated on [s, u]
/// and the trunk on [u, t]. `lower_weight` and `trunk_weight` give node weights by ambient id.
double convolve_terms(const std::vector<CutTerm>& terms, TreeQuadrature& upper, TreeQuadrature& lower, double tau,
                      const std::function<const std::vector<double>*(int)>& upper_weight,
                      const std::function<const std::vector<double>*(int)>& lower_weight) {
  const auto taus = grid_points(upper.grid());
  // all pruned trees, each with its own directives
  std::vector<NodeDirectives> lower_dirs;
  std::vector<const CutTerm*> owner;
  std::vector<int> which;
  for (const auto& term : terms) {
    for (std::size_t j = 0; j < term.pruned.size(); ++j) {
      const auto& p = term.pruned[j];
      NodeDirectives d = NodeDirectives::none(p.tree);
      for (int v = 1; v < p.tree.size(); ++v) d.weight[v] = lower_weight(p.ids[v]);
      lower_dirs.push_back(std::move(d));
      owner.push_back(&term);
      which.push_back(static_cast<int>(j));
    }
  }
  std::vector<TreeQuadrature::Item> items;
  for (std::size_t i = 0; i < lower_dirs.size(); ++i)
    items.push_back({&owner[i]->pruned[which[i]].tree, &lower_dirs[i]});
  auto at_grid = lower.integrals(items, taus);
  auto at_tau = lower.integrals(items, {tau});

  double total = 0;
  std::size_t next = 0;
  for (const auto& term : terms) {
    const auto& trunk = term.trunk.tree;
    NodeDirectives d = NodeDirectives::none(trunk);
    std::vector<std::vector<double>> weights(trunk.size());
    double root = 1;
    for (int v = 1; v < trunk.size(); ++v) {
      if (const auto* w = upper_weight(term.trunk.ids[v])) weights[v] = *w;
    }
    for (std::size_t j = 0; j < term.pruned.size(); ++j, ++next) {
      const int at = term.attachment[j];
      if (at == 0) {
        root *= at_tau[next][0];
        continue;
      }
      if (weights[at].empty()) weights[at].assign(taus.size(), 1.0);
      for (std::size_t g = 0; g < taus.size(); ++g) weights[at][g] *= at_grid[next][g];
    }
    for (int v = 1; v < trunk.size(); ++v)
      if (!weights[v].empty()) d.weight[v] = &weights[v];
    total += root * upper.integral(trunk, tau, &d);
  }
  return total;
}

}  // namespace

double iterated_integral(const DecoratedTree& h, const VolterraKernel& k, const DriverPath& q, double s, double t,
                         double tau, const QuadratureOptions& opt) {
  check_times(s, t, tau);
  check_tree(h, q);
  const auto fine = refine_driver(q, opt.refine);
  check_size(fine, s, t);
  if (use_exact(k, opt)) {
    ConstantKernelTrees exact(QuadGrid(k, fine, s, t, {}, false), constant_value(k));
    return exact.value(h);
  }
  TreeQuadrature engine(QuadGrid(k, fine, s, t));
  return engine.integral(h, tau);
}

PartialIntegral iterated_integral_partial(const DecoratedTree& h, const std::vector<int>& nodes,
                                          const std::vector<double>& values, const VolterraKernel& k,
                                          const DriverPath& q, double s, double t, double tau,
                                          const QuadratureOptions& opt) {
  check_times(s, t, tau);
  check_tree(h, q);
  if (nodes.size() != values.size()) throw PreconditionError("one fixed value per node is required");
  std::vector<bool> seen(h.size(), false);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const int v = nodes[i];
    if (v <= 0 || v >= h.size() || seen[v]) throw PreconditionError("fixed nodes must be distinct decorated nodes");
    seen[v] = true;
    if (!(values[i] > s && values[i] < t)) throw PreconditionError("fixed values must lie inside (s, t)");
  }
  const auto fine = refine_driver(q, opt.refine);
  check_size(fine, s, t);
  TreeQuadrature engine(QuadGrid(k, fine, s, t, values));
  NodeDirectives d = NodeDirectives::none(h);
  PartialIntegral out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    d.pinned[nodes[i]] = engine.grid().index_of(values[i]);
    if (q.is_kink(values[i])) out.kink = true;
  }
  out.value = engine.integral(h, tau, &d);
  return out;
}

double forest_integral(const Forest& f, const std::vector<double>& taus, const VolterraKernel& k, const DriverPath& q,
                       double s, double t, const QuadratureOptions& opt) {
  if (taus.size() != f.size()) throw PreconditionError("forest integral needs one upper time per tree");
  double z = 1;
  for (std::size_t i = 0; i < f.size(); ++i) z *= iterated_integral(f.trees()[i], k, q, s, t, taus[i], opt);
  return z;
}

double weighted_integral(const DecoratedTree& h, const std::vector<NodeWeight>& weights, const VolterraKernel& k,
                         const DriverPath& q, double s, double t, double tau, const QuadratureOptions& opt) {
  check_times(s, t, tau);
  check_tree(h, q);
  if (static_cast<int>(weights.size()) != h.size()) throw PreconditionError("one weight slot per node is required");
  const auto fine = refine_driver(q, opt.refine);
  check_size(fine, s, t);
  TreeQuadrature engine(QuadGrid(k, fine, s, t));
  NodeDirectives d = NodeDirectives::none(h);
  std::vector<std::vector<double>> sampled(h.size());
  for (int v = 1; v < h.size(); ++v) {
    if (!weights[v]) continue;
    sampled[v] = sample_weight(weights[v], engine.grid());
    d.weight[v] = &sampled[v];
  }
  return engine.integral(h, tau, &d);
}

double ChenEvaluation::residual() const { return std::abs(lhs - rhs); }

std::vector<ChenEvaluation> chen_evaluate(const std::vector<DecoratedTree>& trees, const VolterraKernel& k,
                                          const DriverPath& q, double s, double u, double t, double tau,
                                          const QuadratureOptions& opt) {
  if (!(s < u && u < t && t <= tau)) throw PreconditionError("Chen relation requires s < u < t <= tau");
  for (const auto& h : trees) check_tree(h, q);
  const auto fine = refine_driver(q, opt.refine);
  check_size(fine, s, t);
  std::vector<ChenEvaluation> out(trees.size());
  if (use_exact(k, opt)) {
    const double c = constant_value(k);
    ConstantKernelTrees whole(QuadGrid(k, fine, s, t, {}, false), c);
    ConstantKernelTrees upper(QuadGrid(k, fine, u, t, {}, false), c);
    ConstantKernelTrees lower(QuadGrid(k, fine, s, u, {}, false), c);
    for (std::size_t i = 0; i < trees.size(); ++i) {
      out[i].lhs = whole.value(trees[i]);
      for (const auto& term : coproduct(trees[i])) {
        double v = upper.value(term.trunk.tree);
        for (const auto& p : term.pruned) v *= lower.value(p.tree);
        out[i].rhs += v;
      }
    }
    return out;
  }
  TreeQuadrature whole(QuadGrid(k, fine, s, t));
  TreeQuadrature upper(QuadGrid(k, fine, u, t));
  TreeQuadrature lower(QuadGrid(k, fine, s, u));
  auto none = [](int) -> const std::vector<double>* { return nullptr; };
  for (std::size_t i = 0; i < trees.size(); ++i) {
    out[i].lhs = whole.integral(trees[i], tau);
    out[i].rhs = convolve_terms(coproduct(trees[i]), upper, lower, tau, none, none);
  }
  return out;
}

double chen_residual(const DecoratedTree& h, const VolterraKernel& k, const DriverPath& q, double s, double u,
                     double t, double tau, const QuadratureOptions& opt) {
  return chen_evaluate({h}, k, q, s, u, t, tau, opt).front().residual();
}

ChenEvaluation operator_chen(const DecoratedTree& h, const std::vector<NodeWeight>& weights, const VolterraKernel& k,
                             const DriverPath& q, double s, double u, double t, double tau,
                             const QuadratureOptions& opt) {
  if (!(s < u && u < t && t <= tau)) throw PreconditionError("Chen relation requires s < u < t <= tau");
  check_tree(h, q);
  if (static_cast<int>(weights.size()) != h.size()) throw PreconditionError("one weight slot per node is required");
  const auto fine = refine_driver(q, opt.refine);
  check_size(fine, s, t);
  TreeQuadrature whole(QuadGrid(k, fine, s, t));
  TreeQuadrature upper(QuadGrid(k, fine, u, t));
  TreeQuadrature lower(QuadGrid(k, fine, s, u));
  auto sampled_on = [&](TreeQuadrature& e) {
    std::vector<std::vector<double>> w(h.size());
    for (int v = 1; v < h.size(); ++v)
      if (weights[v]) w[v] = sample_weight(weights[v], e.grid());
    return w;
  };
  auto w_whole = sampled_on(whole), w_upper = sampled_on(upper), w_lower = sampled_on(lower);
  auto full = [&](TreeQuadrature& e, std::vector<std::vector<double>>& w) {
    NodeDirectives d = NodeDirectives::none(h);
    for (int v = 1; v < h.size(); ++v)
      if (!w[v].empty()) d.weight[v] = &w[v];
    return e.integral(h, tau, &d);
  };
  ChenEvaluation out;
  out.lhs = full(whole, w_whole) - full(upper, w_upper) - full(lower, w_lower);
  auto terms = reduced_coproduct(h);
  auto up = [&](int id) -> const std::vector<double>* { return w_upper[id].empty() ? nullptr : &w_upper[id]; };
  auto lo = [&](int id) -> const std::vector<double>* { return w_lower[id].empty() ? nullptr : &w_lower[id]; };
  out.rhs = terms.empty() ? 0.0 : convolve_terms(terms, upper, lower, tau, up, lo);
  return out;
}

ChenReport chen_report(const std::vector<DecoratedTree>& trees, const VolterraKernel& k, const DriverPath& q,
                       int refine, int samples, std::uint64_t seed, bool exact_constant) {
  ChenReport rep;
  rep.computed = true;
  const int m = q.cells();
  if (m < 2) throw PreconditionError("Chen report needs at least two grid cells");
  std::vector<DecoratedTree> active;
  for (const auto& h : trees)
    if (!h.is_unit()) active.push_back(h);
  std::mt19937_64 rng(seed);
  struct Pick {
    int a, c, top;
    double u;
  };
  std::vector<Pick> picks;
  std::uniform_int_distribution<int> pick(0, m);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  for (int n = 0; n < samples; ++n) {
    int a, c;
    do {
      a = pick(rng);
      c = pick(rng);
    } while (a == c);
    if (a > c) std::swap(a, c);
    // the split point is drawn off the grid so that both sides use different quadrature nodes
    const double u = q.time(a) + unit(rng) * (q.time(c) - q.time(a));
    std::uniform_int_distribution<int> top(c, m);
    picks.push_back({a, c, top(rng), u});
  }
  std::vector<std::vector<ChenSample>> rows(picks.size());
  parallel_for(static_cast<int>(picks.size()), [&](int n) {
    const auto& p = picks[n];
    const double s = q.time(p.a), u = p.u, t = q.time(p.c), tau = q.time(p.top);
    auto coarse = chen_evaluate(active, k, q, s, u, t, tau, {refine, exact_constant});
    auto fine = chen_evaluate(active, k, q, s, u, t, tau, {refine + 1, exact_constant});
    for (std::size_t i = 0; i < active.size(); ++i)
      rows[n].push_back({s, u, t, tau, to_string(active[i]), coarse[i].residual(), fine[i].residual()});
  });
  for (auto& r : rows)
    for (auto& sample : r) {
      rep.max_residual = std::max(rep.max_residual, sample.residual);
      rep.max_residual_fine = std::max(rep.max_residual_fine, sample.residual_fine);
      rep.samples.push_back(std::move(sample));
    }
  rep.tolerance = std::max(10 * rep.max_residual_fine, 1e-12);
  rep.conforming = rep.max_residual <= rep.tolerance;
  return rep;
}

bool VolterraLift::has(const DecoratedTree& h) const {
  return std::find(keys_.begin(), keys_.end(), h.key()) != keys_.end();
}

int VolterraLift::tree_index(const DecoratedTree& h) const {
  auto it = std::find(keys_.begin(), keys_.end(), h.key());
  if (it == keys_.end()) throw PreconditionError("tree " + to_string(h) + " is not part of the lift");
  return static_cast<int>(it - keys_.begin());
}

std::size_t VolterraLift::slot(int a, int b, int c) const {
  const int m = cells();
  if (a < 0 || a > b || b > c || c > m) throw PreconditionError("lift query requires grid indices a <= b <= c");
  if (full_) return offsets_[static_cast<std::size_t>(a) * (m + 1) + b] + (c - b);
  if (b != a + 1) throw PreconditionError("cell tables only hold single-cell increments");
  return static_cast<std::size_t>(a) * (m + 1) + c;
}

double VolterraLift::value(const DecoratedTree& h, int a, int b, int c) const {
  const int i = tree_index(h);
  if (a == b) {
    if (a < 0 || b > c || c > cells()) throw PreconditionError("lift query requires grid indices a <= b <= c");
    return trees_[i].is_unit() ? 1.0 : 0.0;
  }
  return tables_[i][slot(a, b, c)];
}

VolterraLift::Query VolterraLift::at(const DecoratedTree& h, double s, double t, double tau) const {
  check_times(s, t, tau);
  const int ia = driver_.index_of(s), ib = driver_.index_of(t), ic = driver_.index_of(tau);
  if (ia >= 0 && ib >= 0 && ic >= 0) return {value(h, ia, ib, ic), false};
  if (!full_) throw PreconditionError("off-grid lift queries need full tables");
  const int m = cells();
  auto locate = [&](double x, int& i, double& w) {
    i = std::min(driver_.cell_of(x), m - 1);
    w = (x - driver_.time(i)) / (driver_.time(i + 1) - driver_.time(i));
  };
  int i[3];
  double w[3];
  locate(s, i[0], w[0]);
  locate(t, i[1], w[1]);
  locate(tau, i[2], w[2]);
  double acc = 0;
  for (int corner = 0; corner < 8; ++corner) {
    int idx[3];
    double weight = 1;
    for (int dim = 0; dim < 3; ++dim) {
      const int up = (corner >> dim) & 1;
      idx[dim] = i[dim] + up;
      weight *= up ? w[dim] : 1 - w[dim];
    }
    if (weight == 0) continue;
    idx[1] = std::max(idx[1], idx[0]);
    idx[2] = std::max(idx[2], idx[1]);
    acc += weight * value(h, idx[0], idx[1], idx[2]);
  }
  return {acc, true};
}

std::vector<double> VolterraLift::sup_norms() const {
  std::vector<double> out;
  for (const auto& t : tables_) {
    double m = 0;
    for (double v : t) m = std::max(m, std::abs(v));
    out.push_back(m);
  }
  return out;
}

void VolterraLift::export_csv(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["kernel"] = kernel_.name();
  manifest["kernel_order"] = kernel_.gamma();
  std::ostringstream hash;
  hash << std::hex << driver_.hash();
  manifest["driver_hash"] = hash.str();
  manifest["driver_dimension"] = driver_.dim();
  manifest["alpha"] = config_.alpha;
  manifest["gamma"] = config_.gamma;
  manifest["rho"] = rho();
  manifest["n"] = config_.n;
  manifest["refine"] = config_.refine;
  manifest["full_tables"] = full_;
  manifest["construction"] =
      "explicit integration of the piecewise-linear driver; left-point product integration with exact kernel cell "
      "integrals";
  const auto sups = sup_norms();
  const int m = cells();
  for (std::size_t i = 0; i < trees_.size(); ++i) {
    const std::string name = to_string(trees_[i]) + ".csv";
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw ValidationError("cannot write " + (fs::path(dir) / name).string());
    out << "s,t,tau,value\n";
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b <= (full_ ? m : a + 1); ++b)
        for (int c = b; c <= m; ++c)
          out << format_double(driver_.time(a)) << ',' << format_double(driver_.time(b)) << ','
              << format_double(driver_.time(c)) << ',' << format_double(tables_[i][slot(a, b, c)]) << '\n';
    }
    manifest["trees"].push_back({{"tree", to_string(trees_[i])}, {"file", name}, {"sup", sups[i]}});
  }
  nlohmann::json chen;
  chen["computed"] = report_.computed;
  chen["max_residual"] = report_.max_residual;
  chen["max_residual_fine"] = report_.max_residual_fine;
  chen["tolerance"] = report_.tolerance;
  chen["conforming"] = report_.conforming;
  chen["samples"] = report_.samples.size();
  manifest["chen_report"] = chen;
  std::ofstream(fs::path(dir) / "manifest.json") << manifest.dump(2) << '\n';
}

VolterraLift build_lift(const VolterraKernel& k, const DriverPath& q, const LiftConfig& cfg) {
  const double rho = cfg.alpha - cfg.gamma;
  if (!(cfg.alpha > 0 && cfg.alpha <= 1) || !(cfg.gamma >= 0) || !(rho > 0))
    throw PreconditionError("lift exponents need 0 < alpha <= 1, gamma >= 0 and alpha > gamma");
  if (cfg.n < 0) throw PreconditionError("truncation level must be >= 0");
  if (!((cfg.n + 1) * rho + cfg.gamma > 1)) throw PreconditionError("truncation condition (n+1)(alpha-gamma)+gamma > 1 fails");
  const auto fine = refine_driver(q, cfg.refine);
  const int m = q.cells();
  const int r = 1 << cfg.refine;
  VolterraLift lift(k, q, cfg);
  lift.full_ = cfg.full_tables;
  lift.trees_ = enumerate_trees(cfg.n, q.dim());
  for (const auto& h : lift.trees_) lift.keys_.push_back(h.key());
  const int nt = static_cast<int>(lift.trees_.size());
  const bool exact = cfg.exact_constant && k.is_constant();
  const double cval = exact ? constant_value(k) : 0.0;

  if (lift.full_) {
    lift.offsets_.assign(static_cast<std::size_t>(m + 1) * (m + 1), 0);
    std::size_t total = 0;
    for (int a = 0; a <= m; ++a)
      for (int b = a; b <= m; ++b) {
        lift.offsets_[static_cast<std::size_t>(a) * (m + 1) + b] = total;
        total += m - b + 1;
      }
    lift.tables_.assign(nt, std::vector<double>(total, 0.0));
    const QuadGrid global(k, fine, fine.time(0), fine.horizon(), {}, !exact);
    parallel_for(m, [&](int a) {
      const QuadGrid window = global.window(a * r, m * r);
      if (exact) {
        ConstantKernelTrees trees(window, cval);
        for (int i = 0; i < nt; ++i) {
          const auto& prefix = trees.prefix(lift.trees_[i]);
          for (int b = a; b <= m; ++b)
            for (int c = b; c <= m; ++c) lift.tables_[i][lift.slot(a, b, c)] = prefix[(b - a) * r];
        }
        return;
      }
      TreeQuadrature engine(window);
      for (int c = a; c <= m; ++c) {
        const double tau = q.time(c);
        std::map<std::string, std::vector<double>> prefixes;
        for (int i = 0; i < nt; ++i) {
          const auto& h = lift.trees_[i];
          std::vector<const std::vector<double>*> parts;
          for (int ch : h.children(0)) {
            auto it = prefixes.find(h.subtree_key(ch));
            if (it == prefixes.end()) it = prefixes.emplace(h.subtree_key(ch), engine.root_prefix(h, ch, tau)).first;
            parts.push_back(&it->second);
          }
          for (int b = a; b <= c; ++b) {
            double z = 1;
            for (const auto* p : parts) z *= (*p)[(b - a) * r];
            lift.tables_[i][lift.slot(a, b, c)] = z;
          }
        }
      }
    });
  } else {
    lift.tables_.assign(nt, std::vector<double>(static_cast<std::size_t>(m) * (m + 1), 0.0));
    const QuadGrid global(k, fine, fine.time(0), fine.horizon(), {}, false);
    parallel_for(m, [&](int l) {
      const QuadGrid window = global.window(l * r, (l + 1) * r);
      if (exact) {
        ConstantKernelTrees trees(window, cval);
        for (int i = 0; i < nt; ++i) {
          const double v = trees.value(lift.trees_[i]);
          for (int c = l + 1; c <= m; ++c) lift.tables_[i][lift.slot(l, l + 1, c)] = v;
        }
        return;
      }
      TreeQuadrature engine(window);
      std::vector<double> taus;
      for (int c = l + 1; c <= m; ++c) taus.push_back(q.time(c));
      std::vector<TreeQuadrature::Item> items;
      for (const auto& h : lift.trees_) items.push_back({&h, nullptr});
      auto values = engine.integrals(items, taus);
      for (int i = 0; i < nt; ++i)
        for (int c = l + 1; c <= m; ++c) lift.tables_[i][lift.slot(l, l + 1, c)] = values[i][c - l - 1];
    });
  }
  if (cfg.chen_samples > 0 && m >= 2)
    lift.report_ = chen_report(lift.trees_, k, q, cfg.refine, cfg.chen_samples, cfg.seed, cfg.exact_constant);
  return lift;
}

}  // namespace vbrp
