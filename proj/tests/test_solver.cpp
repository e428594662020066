#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vbrp/error.hpp"
#include "vbrp/solver.hpp"
#include "volterra_oracle.hpp"

using namespace vbrp;

namespace {

constexpr double two_pi = 2 * std::numbers::pi;
constexpr double gamma_frac = 0.25;

VolterraLift young_lift(int cells, double amplitude = 1.0) {
  auto grid = uniform_grid(1.0, cells);
  auto q = make_driver(grid, {[amplitude](double r) { return amplitude * std::sin(two_pi * r); }});
  LiftConfig cfg;
  cfg.n = 1;
  cfg.alpha = 1.0;
  cfg.gamma = gamma_frac;
  cfg.refine = 2;
  cfg.full_tables = false;
  cfg.chen_samples = 0;
  return build_lift(make_fractional_kernel(gamma_frac), q, cfg);
}

double drift_closed_form(double y0, double c, double t) { return y0 + c * std::pow(t, 1 - gamma_frac) / (1 - gamma_frac); }

double drift_error(const Solution& sol, double y0, double c) {
  double err = 0;
  for (std::size_t j = 0; j < sol.path.size(); ++j)
    err = std::max(err, std::abs(sol.path[j] - drift_closed_form(y0, c, sol.times[j])));
  return err;
}

const std::vector<VectorField> sine_fields{VectorField::sine(), VectorField::sine()};

}  // namespace

TEST_CASE("zero vector fields leave the initial value in place") {
  const auto lift = young_lift(64);
  const auto sol = solve(0.7, {VectorField::zero(), VectorField::zero()}, lift);
  REQUIRE(sol.path.size() == 65);
  for (double v : sol.path) CHECK(v == 0.7);
  for (int j = 0; j <= 64; ++j)
    for (int c = j; c <= 64; ++c) CHECK(sol.value(j, c) == 0.7);
  for (const auto& row : sol.components)
    for (std::size_t k = 1; k < row.size(); ++k) CHECK(row[k] == 0.0);
  for (const auto& w : sol.windows) {
    CHECK(w.converged);
    CHECK(w.iterations == 1);
  }
}

TEST_CASE("drift with a constant field matches the closed form") {
  const double y0 = 0.3, c = 1.4;
  const auto lift = young_lift(256);
  SolveConfig single;
  single.max_halvings = 0;
  const auto one = solve(y0, {VectorField::constant(c), VectorField::zero()}, lift, single);
  CHECK(one.windows.size() == 1);
  const double err1 = drift_error(one, y0, c);
  CHECK(err1 < 1e-4);

  SolveConfig four = single;
  four.window = 0.25;
  const auto split = solve(y0, {VectorField::constant(c), VectorField::zero()}, lift, four);
  CHECK(split.windows.size() == 4);
  const double err4 = drift_error(split, y0, c);
  INFO("single " << err1 << " four " << err4);
  CHECK(err4 < 1e-4);
  // both are at rounding level; compare with a floor of a few ulps
  CHECK(err4 < 2 * std::max(err1, 1e-15));
}

TEST_CASE("one Picard step from the initial value is the explicit Volterra Euler value") {
  const auto lift = young_lift(32);
  const double y0 = 0.4;
  const std::vector<VectorField> fields{VectorField::sine(0.5, 1.0, 0.3), VectorField::sine()};
  SolveConfig cfg;
  PicardMap map(lift, fields, 0, 32, std::vector<double>(33, y0), cfg);
  const auto step = map.apply(map.initial());
  for (int j = 1; j <= 32; ++j) {
    double euler = y0;
    for (int l = 0; l < j; ++l)
      for (Label i = 0; i <= 1; ++i) euler += fields[i](y0) * lift.cell(planted_dot(i), l, j);
    CHECK(step.values[j][0] == doctest::Approx(euler).epsilon(1e-13));
  }
  CHECK(step.values[0][0] == y0);
}

TEST_CASE("Young regime solve converges to the product trapezoid oracle") {
  const double y0 = 0.5;
  const int fine = 1 << 13;
  const auto reference = oracle::product_trapezoid(
      y0, gamma_frac, fine, [](double v) { return std::sin(v); },
      [](double r) { return two_pi * std::cos(two_pi * r); }, [](double v) { return std::sin(v); });
  double prev = 1;
  for (int cells = 1 << 7; cells <= 1 << 10; cells *= 2) {
    const auto sol = solve(y0, sine_fields, young_lift(cells));
    double err = 0;
    for (int j = 0; j <= cells; ++j) err = std::max(err, std::abs(sol.path[j] - reference[j * (fine / cells)]));
    INFO("cells " << cells << " error " << err);
    CHECK(err < prev);
    prev = err;
    for (const auto& w : sol.windows) {
      CHECK(w.converged);
      CHECK(w.residual <= SolveConfig{}.tolerance);
    }
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("contraction ratios shrink as the window is halved") {
  const auto lift = young_lift(256);
  std::vector<double> mean, worst;
  for (int k = 0; k <= 7; ++k) {
    SolveConfig cfg;
    cfg.window = std::ldexp(1.0, -k);
    cfg.max_halvings = 0;
    cfg.patience = 100;
    const auto sol = solve(0.5, sine_fields, lift, cfg);
    double m = 0, w = 0;
    for (const auto& win : sol.windows) {
      m = std::max(m, win.mean_ratio);
      w = std::max(w, win.max_ratio);
    }
    mean.push_back(m);
    worst.push_back(w);
  }
  for (std::size_t k = 1; k < mean.size(); ++k) CHECK(mean[k] < mean[k - 1]);
  for (std::size_t k = 3; k < worst.size(); ++k) CHECK(worst[k] < 1.0);
  for (std::size_t k = 4; k <= 6; ++k) CHECK(worst[k] < worst[k - 1]);
}

TEST_CASE("distinct initial guesses reach the same fixed point") {
  const auto lift = young_lift(128);
  SolveConfig cfg;
  PicardMap map(lift, sine_fields, 0, 16, std::vector<double>(129, 0.5), cfg);
  std::vector<double> other(17);
  for (int j = 0; j <= 16; ++j) other[j] = 0.5 + 0.4 * std::sin(7.0 * j / 16);
  const auto a = solve_window(map, cfg);
  const auto b = solve_window(map, cfg, map.from_diagonal(other));
  const auto ya = map.apply(a.state), yb = map.apply(b.state);
  double gap = 0;
  for (int j = 0; j <= 16; ++j) gap = std::max(gap, std::abs(ya.values[j][0] - yb.values[j][0]));
  CHECK(gap < 10 * cfg.tolerance);
  CHECK(b.report.iterations > 1);
}

TEST_CASE("stitched windows agree with solve_window on every window") {
  const auto lift = young_lift(128);
  SolveConfig cfg;
  cfg.window = 0.25;
  const auto sol = solve(0.5, sine_fields, lift, cfg);
  REQUIRE(sol.windows.size() == 4);
  for (std::size_t k = 0; k < sol.windows.size(); ++k) {
    const auto& w = sol.windows[k];
    if (k > 0) CHECK(w.first == sol.windows[k - 1].last);
    std::vector<double> history;
    for (int c = w.first; c <= 128; ++c) history.push_back(sol.value(w.first, c));
    PicardMap map(lift, sine_fields, w.first, w.last, history, cfg);
    const auto ws = solve_window(map, cfg);
    const auto rows = map.extend(ws.state);
    for (int j = 0; j <= w.last - w.first; ++j)
      for (int c = w.first + j; c <= 128; ++c) CHECK(rows[j][c - w.first] == sol.value(w.first + j, c));
    CHECK(ws.report.iterations == w.iterations);
  }
  for (int j = 0; j <= 128; ++j) CHECK(sol.path[j] == sol.value(j, j));
}

TEST_CASE("solution regularity is stable under refinement") {
  auto norm = [](int cells) {
    const auto sol = solve(0.5, sine_fields, young_lift(cells));
    std::vector<double> grid;
    for (int k = 0; k <= 16; ++k) grid.push_back(static_cast<double>(k) / 16);
    auto index = [cells](double t) { return static_cast<int>(std::lround(t * cells)); };
    return empirical_increment_norm(
        [&](double s, double t, double tau) { return sol.value(index(t), index(tau)) - sol.value(index(s), index(tau)); },
        grid, sol.beta, gamma_frac);
  };
  const double coarse = norm(128), finer = norm(256);
  CHECK(std::isfinite(coarse));
  CHECK(finer == doctest::Approx(coarse).epsilon(0.05));
}

TEST_CASE("solver preconditions") {
  const auto lift = young_lift(32);
  SolveConfig cfg;
  CHECK_THROWS_AS(PicardMap(lift, {VectorField::sine()}, 0, 32, std::vector<double>(33, 0.0), cfg), PreconditionError);
  CHECK_THROWS_AS(PicardMap(lift, sine_fields, 0, 32, std::vector<double>(10, 0.0), cfg), PreconditionError);
  CHECK_THROWS_AS(PicardMap(lift, sine_fields, 4, 4, std::vector<double>(29, 0.0), cfg), PreconditionError);
  CHECK_THROWS_AS(PicardMap(lift, {VectorField::sine(1, 1, 0, 1), VectorField::sine()}, 0, 32,
                            std::vector<double>(33, 0.0), cfg),
                  PreconditionError);
  SolveConfig bad = cfg;
  bad.beta = 0.2;
  CHECK_THROWS_AS(PicardMap(lift, sine_fields, 0, 32, std::vector<double>(33, 0.0), bad), PreconditionError);
  CHECK(default_beta(1.0, 0.25, 1) == 1.0);
  CHECK(default_beta(0.5, 0.1, 2) == doctest::Approx(0.5));
}

TEST_CASE("solution exports") {
  const auto sol = solve(0.5, sine_fields, young_lift(16));
  const auto csv = sol.to_csv();
  CHECK(csv.rfind("t,y\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 18);
  const auto json = sol.report_json();
  CHECK(json.find("\"windows\"") != std::string::npos);
  CHECK(json == solve(0.5, sine_fields, young_lift(16)).report_json());
}
