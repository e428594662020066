#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>

#include "vbrp/coproduct.hpp"
#include "vbrp/error.hpp"
#include "vbrp/sewing.hpp"
#include "vbrp/star.hpp"

using namespace vbrp;

namespace {

constexpr double two_pi = 2 * std::numbers::pi;

std::vector<double> linspace(double a, double b, int cells) {
  std::vector<double> out;
  for (int i = 0; i <= cells; ++i) out.push_back(a + (b - a) * i / cells);
  return out;
}

/// ∫_s^t (τ - r)^{-γ} x'(r) dr with the endpoint singularity resolved through the distance to τ.
double fractional_integral(double gamma, const std::function<double(double)>& dx, double s, double t, double tau) {
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(
      [&](double r, double rc) {
        const double gap = rc > 0 ? (tau - t) + rc : tau - r;
        return std::pow(gap, -gamma) * dx(r);
      },
      s, t);
}

AbstractIntegrand kernel_germ(const VolterraKernel& k, std::function<double(double)> x, double beta) {
  return AbstractIntegrand::simple([k, x](double s, double t, double tau) { return k(tau, s) * (x(t) - x(s)); }, 1.0,
                                   0.25, beta, beta - 0.75);
}

}  // namespace

TEST_CASE("delta operator") {
  auto additive = [](double s, double t) { return std::exp(t) - std::exp(s); };
  for (double u : {0.1, 0.5, 0.9}) CHECK(std::abs(delta(additive, 0.0, u, 1.0)) < 1e-15);
  auto square = [](double s, double t) { return (t - s) * (t - s); };
  CHECK(delta(square, 0.0, 1.0, 2.0) == 2.0);
  CHECK_THROWS_AS(delta(square, 1.0, 0.0, 2.0), PreconditionError);
}

TEST_CASE("empirical Volterra norms") {
  auto grid = linspace(0, 1, 8);
  VolterraFunction zero([](double, double) { return 0.0; }, 0.5, 0.25);
  CHECK(empirical_norm_1(zero, grid) == 0.0);
  CHECK(empirical_norm_12(zero, grid) == 0.0);

  VolterraFunction time([](double t, double) { return t; }, 1.0, 0.0);
  CHECK(empirical_norm_1(time, grid) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(empirical_norm_12(time, grid) == 0.0);

  // z^τ_t = ∫_0^t (τ - r)^{-γ} dr is finite in both norms and its grid suprema settle
  const double g = 0.25;
  VolterraFunction z([g](double t, double tau) { return (std::pow(tau, 1 - g) - std::pow(tau - t, 1 - g)) / (1 - g); },
                     1.0, g);
  CHECK(z.initial(0.3) == 0.0);
  CHECK(z.initial(0.9) == 0.0);
  NormLattice zeta_zero;
  zeta_zero.zeta_samples = 1;
  double prev1 = 0, prev12 = 0, prev0 = 0, step0 = 0;
  for (int cells : {4, 8, 16, 32}) {
    auto gr = linspace(0, 1, cells);
    const double n1 = empirical_norm_1(z, gr), n12 = empirical_norm_12(z, gr), n0 = empirical_norm_12(z, gr, zeta_zero);
    CHECK(n1 >= prev1);
    CHECK(n12 >= prev12);
    CHECK(n0 >= prev0);
    CHECK(n1 <= 1 / (1 - g) + 1e-12);
    if (prev0 > 0) {
      if (step0 > 0) CHECK(n0 - prev0 < 0.9 * step0);
      step0 = n0 - prev0;
    }
    prev1 = n1;
    prev12 = n12;
    prev0 = n0;
  }
  CHECK_THROWS_AS(empirical_norm_1(z, {0.0}), PreconditionError);
  CHECK_THROWS_AS(VolterraFunction([](double, double) { return 0.0; }, 0.2, 0.3), PreconditionError);
}

TEST_CASE("multi-parameter norms") {
  auto grid = linspace(0, 1, 6);
  auto c = MultiParamFunction::constant(2.0, 2);
  CHECK(empirical_norm_multi(c, grid) == 0.0);
  CHECK(c.diagonal(0.1, 0.5) == 2.0);
  MultiParamFunction y([](double s, std::span<const double> r) { return s * (r[0] + 2 * r[1]); }, 2, 1.0, 0.25);
  const double n0 = empirical_norm_multi(y, 0, grid), n1 = empirical_norm_multi(y, 1, grid);
  CHECK(n0 > 0);
  CHECK(n1 == doctest::Approx(2 * n0));
  CHECK(empirical_norm_multi(y, grid) == doctest::Approx(n0 + n1));
  CHECK_THROWS_AS(empirical_norm_multi(y, 2, grid), PreconditionError);
  std::vector<double> one{0.5};
  CHECK_THROWS_AS(y(0.0, one), PreconditionError);
}

TEST_CASE("sewing the germ k(tau, s) x_ts reproduces the Volterra integral") {
  auto k = make_fractional_kernel(0.25);
  auto x = [](double r) { return std::sin(two_pi * r) + r * r; };
  auto dx = [](double r) { return two_pi * std::cos(two_pi * r) + 2 * r; };
  const double beta = 1.7;
  auto xi = kernel_germ(k, x, beta);
  SewingOptions opt;
  opt.max_level = 12;
  for (auto [s, t, tau] : {std::tuple{0.0, 0.75, 1.0}, {0.2, 0.6, 0.61}, {0.0, 1.0, 1.25}}) {
    CAPTURE(t);
    CAPTURE(tau);
    auto r = sewing_integrate(xi, s, t, tau, opt);
    REQUIRE(r.converged);
    const double want = fractional_integral(0.25, dx, s, t, tau);
    CHECK(std::abs(r.value - want) < 1e-6 * std::abs(want));
    for (const auto& l : r.levels)
      if (l.level >= 4) CHECK(l.ratio <= std::pow(2.0, -(beta - 1) + 0.1));
    CHECK(r.empirical_beta >= beta - 0.1);
    CHECK(std::isfinite(r.remainder_constant));
    CHECK(r.to_csv().rfind("level,sum,diff,ratio\n", 0) == 0);
  }

  // with t = τ the last cell sees the singularity and the rate drops to 2 - γ
  opt.max_level = 16;
  auto singular = kernel_germ(k, x, 1.6);
  auto r = sewing_integrate(singular, 0.0, 1.0, 1.0, opt);
  REQUIRE(r.converged);
  CHECK(std::abs(r.value - fractional_integral(0.25, dx, 0.0, 1.0, 1.0)) < 1e-4 * std::abs(r.value));
  for (const auto& l : r.levels)
    if (l.level >= 9) CHECK(l.ratio <= std::pow(2.0, -(1.6 - 1) + 0.1));
  CHECK(r.empirical_beta == doctest::Approx(1.75).epsilon(0.1));
}

TEST_CASE("sewing output is additive and the remainder constant is stable") {
  auto k = make_fractional_kernel(0.25);
  auto x = [](double r) { return std::exp(r); };
  auto xi = kernel_germ(k, x, 1.7);
  SewingOptions opt;
  opt.max_level = 12;
  const double whole = sewing_integrate(xi, 0.0, 0.8, 1.0, opt).checked_value();
  const double left = sewing_integrate(xi, 0.0, 0.3, 1.0, opt).checked_value();
  const double right = sewing_integrate(xi, 0.3, 0.8, 1.0, opt).checked_value();
  CHECK(std::abs(whole - left - right) < 1e-7);
  opt.max_level = 10;
  const double c10 = sewing_integrate(xi, 0.0, 0.8, 1.0, opt).remainder_constant;
  opt.max_level = 12;
  const double c12 = sewing_integrate(xi, 0.0, 0.8, 1.0, opt).remainder_constant;
  CHECK(c12 == doctest::Approx(c10).epsilon(0.05));
}

TEST_CASE("sewing diagnostics") {
  auto k = make_fractional_kernel(0.25);
  auto flat = kernel_germ(k, [](double) { return 3.0; }, 1.7);
  auto r = sewing_integrate(flat, 0.0, 1.0, 1.0);
  CHECK(r.converged);
  CHECK(r.exact);
  CHECK(r.value == 0.0);

  auto rough = AbstractIntegrand::simple([](double s, double t, double) { return std::sqrt(t - s); }, 0.5, 0.0, 1.5, 0.5);
  auto bad = sewing_integrate(rough, 0.0, 1.0, 1.0);
  CHECK_FALSE(bad.converged);
  CHECK(std::isnan(bad.value));
  CHECK_THROWS_AS(bad.checked_value(), DiagnosticError);

  auto wrong = kernel_germ(k, [](double r) { return r; }, 0.9);
  CHECK_THROWS_AS(sewing_integrate(wrong, 0.0, 1.0, 1.0), PreconditionError);
  auto fine = kernel_germ(k, [](double r) { return r; }, 1.5);
  CHECK_THROWS_AS(sewing_integrate(fine, 0.5, 0.2, 1.0), PreconditionError);
  SewingOptions huge;
  huge.max_level = 30;
  CHECK_THROWS_AS(sewing_integrate(fine, 0.0, 1.0, 1.0, huge), ResourceError);
}

TEST_CASE("base star product") {
  const double g = 0.25;
  auto path = [g](double t, double tau) { return (std::pow(tau, 1 - g) - std::pow(tau - t, 1 - g)) / (1 - g); };
  VolterraFunction z(path, 1.0, g);
  VolterraFunction y(path, 1.0, g);
  const double s = 0.1, u = 0.4, t = 0.9, tau = 1.0;

  // ∫_u^t k(τ, r) y^r_{us} dr with y^r_{us} = ((r - s)^{1-γ} - (r - u)^{1-γ}) / (1 - γ)
  boost::math::quadrature::tanh_sinh<double> ts;
  const double want = ts.integrate(
      [&](double r) {
        return std::pow(tau - r, -g) * (std::pow(r - s, 1 - g) - std::pow(r - u, 1 - g)) / (1 - g);
      },
      u, t);
  SewingOptions opt;
  opt.max_level = 12;
  auto r = star_base(z, y, s, u, t, tau, opt);
  REQUIRE(r.sewing.converged);
  CHECK(r.value() == doctest::Approx(want).epsilon(1e-5));
  CHECK(r.bound_constant > 0);
  CHECK(std::isfinite(r.bound_constant));

  // an upper-argument-free y gives the plain product at every level
  VolterraFunction flat([](double t2, double) { return std::cos(t2); }, 1.0, 0.0);
  auto p = star_base(z, flat, s, u, t, tau);
  CHECK(p.sewing.exact);
  CHECK(p.value() == doctest::Approx(z.increment(u, t, tau) * (std::cos(u) - std::cos(s))).epsilon(1e-14));

  // trivial kernel: both factors ignore τ and the product is the tensor product
  VolterraFunction x1([](double t2, double) { return t2 * t2; }, 1.0, 0.0);
  VolterraFunction x2([](double t2, double) { return std::sin(t2); }, 1.0, 0.0);
  auto q = star_base(x1, x2, s, u, t, tau);
  CHECK(q.value() == doctest::Approx((t * t - u * u) * (std::sin(u) - std::sin(s))).epsilon(1e-14));

  // linearity in the second argument
  VolterraFunction mix([&](double t2, double tau2) { return 2 * path(t2, tau2) - 3 * std::cos(t2); }, 1.0, g);
  CHECK(star_base(z, mix, s, u, t, tau, opt).value() ==
        doctest::Approx(2 * r.value() - 3 * p.value()).epsilon(1e-10));
  CHECK_THROWS_AS(star_base(z, y, s, t, u, tau), PreconditionError);
}

TEST_CASE("tree star products over a lift") {
  auto make = [](int cells) {
    return make_driver(uniform_grid(1.0, cells),
                       {[](double r) { return std::sin(two_pi * r); }, [](double r) { return r * r; }});
  };
  auto k = make_exponential_kernel(1.0);
  LiftConfig cfg;
  cfg.n = 3;
  cfg.alpha = 0.9;
  cfg.refine = 2;
  cfg.chen_samples = 0;
  auto q = make(32);
  auto lift = build_lift(k, q, cfg);
  const int s = 4, t = 28, tau = 32;

  SUBCASE("constant functions give the tree increment") {
    for (const auto& h : {planted_dot(1), ladder({1, 2}), cherry(1, 1), ladder({2, 1, 1})}) {
      auto c = MultiParamFunction::constant(1.5, h.grade());
      const auto sums = star_tree_sums(lift, h, c, s, t, tau);
      CAPTURE(to_string(h));
      CHECK(sums.back() == doctest::Approx(1.5 * lift.value(h, s, t, tau)).epsilon(2e-2));
    }
  }

  SUBCASE("separable functions match the smooth convolution") {
    auto coarse_q = make(16);
    auto coarse = build_lift(k, coarse_q, cfg);
    for (const auto& h : {planted_dot(2), ladder({1, 1}), cherry(1, 2), ladder({2, 1})}) {
      std::vector<std::function<double(double)>> factors;
      std::vector<NodeWeight> weights(h.size());
      for (int v = 1; v < h.size(); ++v) {
        auto w = [v](double r) { return 1 + v * r * r; };
        factors.push_back(w);
        weights[v] = w;
      }
      auto y = MultiParamFunction::separable(factors, 1.0, 0.0);
      const double want = weighted_integral(h, weights, k, q, 0.125, 0.875, 1.0, {5});
      StarTreeOptions opt;
      opt.sewing.tolerance = 0.05;
      opt.bounds = true;
      auto r = star_tree(lift, h, y, s, t, tau, opt);
      const double err = std::abs(r.sewing.last_sum - want);
      const double err_coarse = std::abs(star_tree_sums(coarse, h, y, 2, 14, 16).back() - want);
      CAPTURE(to_string(h));
      CHECK(err < 0.08 * std::abs(want));
      CHECK(err < 0.6 * err_coarse + 1e-12);
      CHECK(std::isfinite(r.bound_constant));
    }
  }

  SUBCASE("linearity in y") {
    const auto h = ladder({1, 2});
    MultiParamFunction a([](double, std::span<const double> r) { return r[0] * r[1]; }, 2, 1.0, 0.0);
    MultiParamFunction b([](double, std::span<const double> r) { return std::cos(r[0]) + r[1]; }, 2, 1.0, 0.0);
    MultiParamFunction ab([&](double x, std::span<const double> r) { return 2 * a(x, r) - b(x, r); }, 2, 1.0, 0.0);
    const auto sa = star_tree_sums(lift, h, a, s, t, tau), sb = star_tree_sums(lift, h, b, s, t, tau);
    const auto sab = star_tree_sums(lift, h, ab, s, t, tau);
    for (std::size_t i = 0; i < sa.size(); ++i)
      CHECK(sab[i] == doctest::Approx(2 * sa[i] - sb[i]).epsilon(1e-12).scale(1e-14));
  }

  SUBCASE("preconditions") {
    auto c = MultiParamFunction::constant(1.0, 1);
    CHECK_THROWS_AS(star_tree(lift, ladder({1, 1}), c, s, t, tau), PreconditionError);
    CHECK_THROWS_AS(star_tree(lift, planted_dot(1), c, t, s, tau), PreconditionError);
  }
}

TEST_CASE("lift of order one agrees with the sewing integral") {
  auto q = make_driver(uniform_grid(1.0, 16), {[](double r) { return std::sin(two_pi * r); }});
  auto k = make_fractional_kernel(0.3);
  LiftConfig cfg;
  cfg.n = 1;
  cfg.alpha = 1.0;
  cfg.gamma = 0.3;
  cfg.refine = 4;
  cfg.chen_samples = 0;
  auto lift = build_lift(k, q, cfg);
  auto xi = AbstractIntegrand::simple([&](double s, double t, double tau) { return k(tau, s) * (q(t, 1) - q(s, 1)); },
                                      1.0, 0.3, 1.6, 0.9);
  SewingOptions opt;
  opt.max_level = 18;
  for (auto [a, b, c] : {std::tuple{0, 16, 16}, {2, 9, 12}}) {
    const double sewn = sewing_integrate(xi, q.time(a), q.time(b), q.time(c), opt).checked_value();
    CHECK(lift.value(planted_dot(1), a, b, c) == doctest::Approx(sewn).epsilon(1e-4));
  }
}
