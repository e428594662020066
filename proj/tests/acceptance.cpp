#include <algorithm>
#include <array>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>

#include "taylor_oracle.hpp"
#include "volterra_oracle.hpp"
#include "vbrp/controlled.hpp"
#include "vbrp/coproduct.hpp"
#include "vbrp/experiments.hpp"
#include "vbrp/sewing.hpp"
#include "vbrp/signature.hpp"
#include "vbrp/solver.hpp"
#include "vbrp/star.hpp"

using namespace vbrp;

namespace {

constexpr double two_pi = 2 * std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

/// Strips the attachment list, leaving `trunk ⊗ forest`.
std::string without_attachments(const std::string& line) { return line.substr(0, line.find(" ;")); }

Verdict golden_coproduct() {
  std::ifstream in(std::string(VBRP_TEST_DATA_DIR) + "/ex_plugging.txt");
  if (!in) return {false, "golden file missing"};
  std::multiset<std::string> golden, got;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') golden.insert(line);
  std::istringstream text(coproduct_text("(((0)(1))2(3))"));
  for (std::string line; std::getline(text, line);) got.insert(line.substr(0, line.find(" ;")));
  std::size_t matched = 0;
  for (const auto& g : golden) matched += got.count(g) > 0;
  return {got == golden, std::to_string(matched) + "/" + std::to_string(golden.size()) + " golden terms, " +
                             std::to_string(got.size()) + " computed"};
}

Verdict coassociativity_and_recursion() {
  int trees = 0, failures = 0;
  for (const auto& h : enumerate_trees(4, 2)) {
    ++trees;
    std::vector<std::string> left, right, cut, recursive;
    for (const auto& t : coproduct(h)) {
      for (const auto& inner : coproduct(t.trunk))
        left.push_back(edge_signature(inner.trunk) + " | " + edge_signature(inner.pruned) + " | " +
                       edge_signature(t.pruned));
      for (const auto& f : coproduct_forest(t.pruned))
        right.push_back(edge_signature(t.trunk) + " | " + edge_signature(f.left) + " | " + edge_signature(f.right));
      cut.push_back(t.trunk.tree.key() + " | " + t.pruned_forest().key());
    }
    for (const auto& [t, f] : coproduct_recursive(h)) recursive.push_back(t.key() + " | " + f.key());
    for (auto* v : {&left, &right, &cut, &recursive}) std::sort(v->begin(), v->end());
    failures += !(left == right && cut == recursive);
  }
  return {failures == 0, std::to_string(trees) + " trees, " + std::to_string(failures) + " mismatches"};
}

Verdict connes_kreimer() {
  int trees = 0, failures = 0;
  for (const auto& h : enumerate_trees(4, 2)) {
    ++trees;
    std::vector<std::string> lhs, rhs;
    for (const auto& t : coproduct(h)) {
      Forest pruned;
      for (const auto& p : t.pruned) pruned = pruned * b_minus(p.tree);
      lhs.push_back(b_minus(t.trunk.tree).key() + " | " + pruned.key());
    }
    for (const auto& [l, r] : ck_coproduct(b_minus(h))) rhs.push_back(l.key() + " | " + r.key());
    std::sort(lhs.begin(), lhs.end());
    std::sort(rhs.begin(), rhs.end());
    failures += lhs != rhs;
  }
  return {failures == 0, std::to_string(trees) + " trees, " + std::to_string(failures) + " mismatches"};
}

Verdict generalized_chen() {
  const auto k = make_exponential_kernel(1.0);
  std::vector<DecoratedTree> trees;
  for (const auto& h : enumerate_trees(3, 1))
    if (h.grade() >= 2) trees.push_back(h);
  std::vector<std::vector<double>> residuals(trees.size());
  for (int level = 7; level <= 10; ++level) {
    const auto q = make_driver(uniform_grid(1.0, 1 << level), {[](double r) { return std::sin(two_pi * r); }});
    const auto evals = chen_evaluate(trees, k, q, 0.1, 0.45, 0.8, 0.9);
    for (std::size_t i = 0; i < trees.size(); ++i) residuals[i].push_back(evals[i].residual());
  }
  // sequences at rounding level carry no order information
  constexpr double rounding_floor = 1e-12;
  double worst = 1e9, total = 0;
  int counted = 0, exact = 0;
  for (const auto& r : residuals) {
    if (*std::max_element(r.begin(), r.end()) < rounding_floor) {
      ++exact;
      continue;
    }
    double sum = 0;
    for (std::size_t l = 1; l < r.size(); ++l) sum += std::log2(r[l - 1] / r[l]);
    const double mean = sum / static_cast<double>(r.size() - 1);
    worst = std::min(worst, mean);
    total += mean;
    ++counted;
  }
  return {counted > 0 && worst >= 0.9, std::to_string(counted) + " trees with nonzero residuals, " +
                                           std::to_string(exact) + " at rounding level, averaged order min " +
                                           fmt(worst) + " mean " + fmt(total / counted)};
}

Verdict trivial_kernel() {
  const auto one = make_exponential_kernel(0.0);
  auto factorial = [](int m) { return std::tgamma(m + 1.0); };
  double ladder_worst = 0;
  // d = 0: the time component alone
  const auto time_only = make_driver(uniform_grid(1.0, 16), {});
  for (int m = 1; m <= 3; ++m)
    for (auto [s, t] : {std::pair{0.0, 1.0}, {0.125, 0.6875}, {0.3, 0.95}}) {
      const double want = std::pow(t - s, m) / factorial(m);
      const double got = iterated_integral(ladder(std::vector<Label>(m, 0)), one, time_only, s, t, 1.0);
      ladder_worst = std::max(ladder_worst, std::abs(got - want) / want);
    }
  // a polynomial noise component
  const auto poly = [](double r) { return r * r * r - r + 0.5; };
  const auto grid = uniform_grid(1.0, 16);
  const auto q = make_driver(grid, {poly});
  for (int m = 1; m <= 3; ++m)
    for (auto [s, t] : {std::pair{0.0, 1.0}, {0.125, 0.6875}, {0.3, 0.95}}) {
      const double want = std::pow(q(t, 1) - q(s, 1), m) / factorial(m);
      const double got = iterated_integral(ladder(std::vector<Label>(m, 1)), one, q, s, t, 1.0);
      ladder_worst = std::max(ladder_worst, std::abs(got - want) / std::abs(want));
    }

  // star products against the trivial kernel are plain products
  LiftConfig lc;
  lc.n = 3;
  lc.alpha = 1.0;
  lc.gamma = 0.0;
  lc.refine = 0;
  lc.chen_samples = 0;
  const auto lift = build_lift(one, q, lc);
  double star_worst = 0;
  for (int m = 1; m <= 3; ++m) {
    const auto h = ladder(std::vector<Label>(m, 1));
    const auto y = MultiParamFunction::constant(1.5, m);
    for (auto [s, t] : {std::pair{0, 16}, {2, 11}, {8, 15}}) {
      const double want = 1.5 * std::pow(poly(grid[t]) - poly(grid[s]), m) / factorial(m);
      const double got = star_tree(lift, h, y, s, t, 16).value();
      star_worst = std::max(star_worst, std::abs(got - want) / std::abs(want));
    }
  }
  VolterraFunction x1([poly](double t, double) { return poly(t); }, 1.0, 0.0);
  VolterraFunction x2([](double t, double) { return std::sin(t); }, 1.0, 0.0);
  const double s = 0.1, u = 0.4, t = 0.9;
  const double product = (poly(t) - poly(u)) * (std::sin(u) - std::sin(s));
  star_worst = std::max(star_worst, std::abs(star_base(x1, x2, s, u, t, 1.0).value() - product) / std::abs(product));

  // the Chen relation collapses to the classical one
  double chen_worst = 0;
  for (const auto& h : enumerate_trees(3, 1))
    chen_worst = std::max(chen_worst, chen_residual(h, one, q, 0.125, 0.5, 0.9375, 1.0));
  return {ladder_worst <= 1e-6 && star_worst <= 1e-6 && chen_worst <= 1e-12,
          "ladder relative error " + fmt(ladder_worst) + ", star against product " + fmt(star_worst) +
              ", classical Chen residual " + fmt(chen_worst)};
}

Verdict sewing_rate() {
  const double gamma = 0.25, beta = 1.7;
  const auto k = make_fractional_kernel(gamma);
  auto x = [](double r) { return std::sin(two_pi * r) + r * r; };
  auto dx = [](double r) { return two_pi * std::cos(two_pi * r) + 2 * r; };
  auto xi = AbstractIntegrand::simple([k, x](double s, double t, double tau) { return k(tau, s) * (x(t) - x(s)); }, 1.0,
                                      gamma, beta, beta - (1 - gamma));
  SewingOptions opt;
  opt.max_level = 10;
  const double s = 0.0, t = 0.75, tau = 1.0;
  const auto r = sewing_integrate(xi, s, t, tau, opt);
  const double bound = std::pow(2.0, -(beta - 1) + 0.1);
  double worst = 0;
  for (const auto& l : r.levels)
    if (l.level >= 4) worst = std::max(worst, l.ratio);
  boost::math::quadrature::tanh_sinh<double> ts;
  const double want = ts.integrate([&](double v) { return std::pow(tau - v, -gamma) * dx(v); }, s, t);
  const double rel = std::abs(r.value - want) / std::abs(want);
  return {r.converged && worst <= bound && rel < 1e-4, "max ratio levels 4..10 " + fmt(worst) + " (bound " +
                                                           fmt(bound) + "), relative error " + fmt(rel)};
}

VolterraLift young_lift(int cells) {
  LiftConfig lc;
  lc.n = 1;
  lc.alpha = 1.0;
  lc.gamma = 0.25;
  lc.refine = 2;
  lc.full_tables = false;
  lc.chen_samples = 0;
  return build_lift(make_fractional_kernel(0.25),
                    make_driver(uniform_grid(1.0, cells), {[](double r) { return std::sin(two_pi * r); }}), lc);
}

const std::vector<VectorField>& sine_fields() {
  static const std::vector<VectorField> f{VectorField::sine(), VectorField::sine()};
  return f;
}

Verdict young_solve() {
  const int fine = 1 << 13;
  const auto reference = oracle::product_trapezoid(
      0.5, 0.25, fine, [](double v) { return std::sin(v); }, [](double r) { return two_pi * std::cos(two_pi * r); },
      [](double v) { return std::sin(v); });
  std::vector<double> errors;
  for (int cells = 1 << 7; cells <= 1 << 10; cells *= 2) {
    const auto sol = solve(0.5, sine_fields(), young_lift(cells));
    double err = 0;
    for (int j = 0; j <= cells; ++j) err = std::max(err, std::abs(sol.path[j] - reference[j * (fine / cells)]));
    errors.push_back(err);
  }
  bool monotone = true;
  std::string list;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i > 0) monotone = monotone && errors[i] < errors[i - 1];
    list += (i ? ", " : "") + fmt(errors[i]);
  }
  return {monotone && errors.back() < 1e-3, "sup errors N=128..1024: " + list};
}

Verdict drift_closed_form() {
  const double y0 = 0.5, c = 1.5, gamma = 0.25;
  const auto sol = solve(y0, {VectorField::constant(c), VectorField::zero()}, young_lift(1 << 10));
  double err = 0;
  for (std::size_t j = 0; j < sol.path.size(); ++j)
    err = std::max(err, std::abs(sol.path[j] - (y0 + c * std::pow(sol.times[j], 1 - gamma) / (1 - gamma))));
  return {err < 1e-4, "sup error " + fmt(err) + " at N=1024"};
}

Verdict contraction() {
  const auto lift = young_lift(256);
  std::vector<double> mean, worst;
  for (int k = 0; k <= 7; ++k) {
    SolveConfig cfg;
    cfg.window = std::ldexp(1.0, -k);
    cfg.max_halvings = 0;
    cfg.patience = 100;
    const auto sol = solve(0.5, sine_fields(), lift, cfg);
    double m = 0, w = 0;
    for (const auto& win : sol.windows) {
      m = std::max(m, win.mean_ratio);
      w = std::max(w, win.max_ratio);
    }
    mean.push_back(m);
    worst.push_back(w);
  }
  bool mean_decreasing = true;
  for (std::size_t k = 1; k < mean.size(); ++k) mean_decreasing = mean_decreasing && mean[k] < mean[k - 1];
  bool small_below_one = true, small_decreasing = true;
  for (std::size_t k = 3; k <= 6; ++k) {
    small_below_one = small_below_one && worst[k] < 1.0;
    if (k > 3) small_decreasing = small_decreasing && worst[k] < worst[k - 1];
  }
  std::string m, w;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    m += (k ? " " : "") + fmt(mean[k], 2);
    w += (k ? " " : "") + fmt(worst[k], 2);
  }
  return {mean_decreasing && small_below_one && small_decreasing,
          "window 1..1/128 mean ratios [" + m + "], max ratios [" + w + "]"};
}

bool ulp_close(double a, double b) { return std::abs(a - b) <= 4e-16 * std::max(std::abs(a), std::abs(b)); }

/// Upper-argument-dependent component with a distinct factor per argument slot.
MultiParamFunction sloped(int arity, double shift) {
  return MultiParamFunction(
      [shift](double s, std::span<const double> r) {
        double v = 1 + shift + 0.3 * s;
        for (std::size_t k = 0; k < r.size(); ++k) v *= 1 + 0.2 * static_cast<double>(k + 1) * r[k];
        return v;
      },
      arity, 1.0, 0.0);
}

Verdict chain_rule() {
  LiftConfig lc;
  lc.n = 3;
  lc.alpha = 1.0;
  lc.gamma = 0.0;
  lc.refine = 1;
  lc.chen_samples = 0;
  const auto lift = build_lift(make_exponential_kernel(1.0),
                               make_driver(uniform_grid(1.0, 8), {[](double r) { return std::sin(two_pi * r) / 2; }}), lc);
  const auto e0 = planted_dot(0), e1 = planted_dot(1), h4 = ladder({1, 0});
  auto y = ControlledPath::canonical(lift, 3, 0) + ControlledPath::canonical(lift, 3, 1);
  y.set(e0, sloped(2, 0.2));
  y.set(e1, sloped(2, 0.3));
  y.set(h4, sloped(3, 0.4));
  int checked = 0, failed = 0;
  for (const auto& f : {VectorField::polynomial({0, 0, 1}), VectorField::polynomial({0, 0, 0, 1})}) {
    const auto fy = compose(f, y);
    const auto& grid = lift.grid();
    const std::size_t points = grid.size();
    for (std::size_t is = 0; is < points; ++is)
      for (std::size_t i0 = is; i0 < points; ++i0)
        for (std::size_t i1 = is; i1 < points; i1 += 2) {
          const double s = grid[is], r0 = grid[i0], r1 = grid[i1], r2 = grid[points - 1 - (i1 - is)];
          const std::vector<double> args{r0, r1, r2};
          const double base = y(DecoratedTree(), s, std::vector<double>{r0});
          const double d1 = f.derivative(1, base), d2 = f.derivative(2, base);
          const double a = y(e0, s, std::vector<double>{r0, r1});
          const double b = y(e1, s, std::vector<double>{r0, r2});
          // h1 h2 with distinct planted factors: two ordered slots of ½ f'' y^{h1} ⊗ y^{h2}
          failed += !ulp_close(fy(cherry(0, 1), s, args), 2 * (0.5 * d2 * a * b));
          // repeated planted factor
          failed += !ulp_close(fy(cherry(0, 0), s, args), 0.5 * d2 * a * y(e0, s, std::vector<double>{r0, r2}));
          // planted h4: f'(y) y^{h4}
          failed += !ulp_close(fy(h4, s, args), d1 * y(h4, s, args));
          failed += !ulp_close(fy(e0, s, std::vector<double>{r0, r1}), d1 * a);
          checked += 4;
        }
  }

  const auto trees = enumerate_trees(3, 1);
  ChainRule rule(trees);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  double worst = 0;
  for (const auto& f : {VectorField::polynomial({0, 0, 1}), VectorField::polynomial({0, 0, 0, 1}), VectorField::sine()})
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> values(trees.size(), 0.0);
      std::vector<std::pair<DecoratedTree, double>> planted;
      values[0] = unif(rng);
      for (std::size_t k = 1; k < trees.size(); ++k)
        if (trees[k].is_planted()) {
          values[k] = unif(rng);
          planted.emplace_back(trees[k], values[k]);
        }
      const auto expected = oracle::taylor_by_tree(f, values[0], planted, 3);
      const auto got = rule.apply(f, values);
      for (std::size_t k = 1; k < trees.size(); ++k) {
        auto it = expected.find(trees[k].key());
        const double want = it == expected.end() ? 0.0 : it->second;
        worst = std::max(worst, std::abs(got[k] - want) / std::max(1.0, std::abs(want)));
      }
    }
  return {failed == 0 && worst <= 1e-14, std::to_string(checked - failed) + "/" + std::to_string(checked) +
                                             " worked derivatives exact, " + std::to_string(trees.size()) +
                                             " trees against Taylor with mismatch " + fmt(worst)};
}

Verdict operator_chen_identity() {
  const auto k = make_exponential_kernel(1.0);
  const int cells = 64;
  const auto q = make_driver(uniform_grid(1.0, cells), {[](double r) { return std::sin(two_pi * r); }});
  LiftConfig lc;
  lc.n = 3;
  lc.alpha = 1.0;
  lc.gamma = 0.0;
  lc.refine = 2;
  lc.chen_samples = 8;
  lc.full_tables = false;
  const auto lift = build_lift(k, q, lc);
  const double tolerance = 10 * lift.chen_report().tolerance;
  std::vector<DecoratedTree> trees;
  for (const auto& h : enumerate_trees(3, 1))
    if (h.grade() >= 2) trees.push_back(h);
  // grid points for s < t <= τ and an off-grid split point, as in the lift's own report
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> index(0, cells);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  QuadratureOptions opt;
  opt.refine = lc.refine;
  double worst = 0;
  for (int sample = 0; sample < 100; ++sample) {
    int a = index(rng), b = index(rng), c = index(rng);
    std::array<int, 3> p{a, b, c};
    std::sort(p.begin(), p.end());
    if (p[0] == p[1]) {
      --sample;
      continue;
    }
    const double s = q.time(p[0]), t = q.time(p[1]), tau = q.time(p[2]);
    const double u = s + (t - s) * (0.05 + 0.9 * unif(rng));
    const auto& h = trees[static_cast<std::size_t>(sample) % trees.size()];
    std::vector<NodeWeight> w(static_cast<std::size_t>(h.size()));
    for (int v = 1; v < h.size(); ++v) w[v] = [v](double r) { return 1.0 + 0.3 * v * r; };
    worst = std::max(worst, operator_chen(h, w, k, q, s, u, t, tau, opt).residual());
  }
  return {worst <= tolerance,
          "100 samples, max residual " + fmt(worst) + " against 10x lift tolerance " + fmt(tolerance)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "golden coproduct", 1, golden_coproduct},
      {2, "coassociativity and recursion", 30, coassociativity_and_recursion},
      {3, "Connes-Kreimer intertwining", 30, connes_kreimer},
      {4, "generalized Chen order", 300, generalized_chen},
      {5, "trivial-kernel reduction", 60, trivial_kernel},
      {6, "sewing rate", 60, sewing_rate},
      {7, "Young-regime solve", 300, young_solve},
      {8, "drift closed form", 60, drift_closed_form},
      {9, "contraction behavior", 300, contraction},
      {10, "chain-rule coefficients", 60, chain_rule},
      {11, "operator Chen identity", 300, operator_chen_identity},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = v.pass && seconds < c.budget;
    failures += !pass;
    std::cout << "criterion " << c.id << " " << (pass ? "PASS" : "FAIL") << ": " << c.name << "; " << v.detail << "; "
              << fmt(seconds) << " s (budget " << c.budget << " s)" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
