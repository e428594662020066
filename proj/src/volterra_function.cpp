#include "vbrp/volterra_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vbrp/error.hpp"

namespace vbrp {

namespace {

void check_exponents(double alpha, double gamma) {
  if (!(alpha > 0 && alpha <= 1 && gamma >= 0 && gamma < 1 && alpha > gamma))
    throw PreconditionError("exponents require 0 <= gamma < alpha <= 1");
}

void check_grid(const std::vector<double>& grid) {
  if (grid.size() < 2) throw PreconditionError("norm grids need at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw PreconditionError("norm grids must be strictly increasing");
}

double safe_ratio(double num, double den) {
  if (num == 0) return 0;
  if (!(den > 0) || std::isinf(den)) return 0;
  return std::abs(num) / den;
}

}  // namespace

std::vector<double> NormLattice::etas() const {
  std::vector<double> out;
  for (int i = 0; i < eta_samples; ++i) out.push_back(eta_samples == 1 ? 0.0 : static_cast<double>(i) / (eta_samples - 1));
  return out;
}

std::vector<double> NormLattice::zetas(double rho) const {
  const double top = rho - rho / 16;
  std::vector<double> out;
  for (int i = 0; i < zeta_samples; ++i) out.push_back(zeta_samples == 1 ? 0.0 : top * i / (zeta_samples - 1));
  return out;
}

VolterraFunction::VolterraFunction(Path path, double alpha, double gamma)
    : path_(std::move(path)), alpha_(alpha), gamma_(gamma) {
  check_exponents(alpha, gamma);
  if (!path_) throw PreconditionError("Volterra function needs a path");
}

VolterraFunction VolterraFunction::from_lift(const VolterraLift& lift, const DecoratedTree& h) {
  if (!lift.full_tables()) throw PreconditionError("a lift slice needs full tables");
  if (!lift.has(h)) throw PreconditionError("tree " + to_string(h) + " is not part of the lift");
  const double rho = lift.rho();
  const double gamma = lift.config().gamma;
  const double alpha = std::min(1.0, h.grade() * rho + gamma);
  auto grid = lift.grid();
  auto index = [grid](double x) {
    auto it = std::lower_bound(grid.begin(), grid.end(), x - 1e-12);
    if (it == grid.end() || std::abs(*it - x) > 1e-12) throw PreconditionError("lift slices are only defined on grid points");
    return static_cast<int>(it - grid.begin());
  };
  const VolterraLift* source = &lift;
  DecoratedTree tree = h;
  return VolterraFunction(
      [source, tree, index](double t, double tau) {
        const int b = index(t), c = index(tau);
        if (b > c) throw PreconditionError("lift slices need t <= tau");
        return b == 0 ? 0.0 : source->value(tree, 0, b, c);
      },
      alpha, gamma);
}

double VolterraFunction::increment2(double s, double t, double tau, double tau2) const {
  return path_(t, tau) - path_(t, tau2) - path_(s, tau) + path_(s, tau2);
}

double empirical_increment_norm(const Increment& r, const std::vector<double>& grid, double alpha, double gamma) {
  check_grid(grid);
  if (!(gamma >= 0 && alpha > gamma)) throw PreconditionError("increment norms require 0 <= gamma < alpha");
  const double rho = alpha - gamma;
  double best = 0;
  const int n = static_cast<int>(grid.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int c = j; c < n; ++c) {
        const double s = grid[i], t = grid[j], tau = grid[c];
        const double far = std::pow(tau - s, rho);
        const double near = c == j ? std::numeric_limits<double>::infinity()
                                   : std::pow(tau - t, -gamma) * std::pow(t - s, alpha);
        best = std::max(best, safe_ratio(r(s, t, tau), std::min(near, far)));
      }
  return best;
}

double empirical_norm_1(const VolterraFunction& z, const std::vector<double>& grid) {
  return empirical_increment_norm([&z](double s, double t, double tau) { return z.increment(s, t, tau); }, grid,
                                  z.alpha(), z.gamma());
}

double empirical_norm_12(const VolterraFunction& z, const std::vector<double>& grid, const NormLattice& lattice) {
  check_grid(grid);
  const double a = z.alpha(), g = z.gamma(), rho = z.rho();
  const auto etas = lattice.etas();
  const auto zetas = lattice.zetas(rho);
  double best = 0;
  const int n = static_cast<int>(grid.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int c = j + 1; c < n; ++c)
        for (int e = c + 1; e < n; ++e) {
          const double s = grid[i], t = grid[j], low = grid[c], high = grid[e];
          const double num = z.increment2(s, t, high, low);
          if (num == 0) continue;
          for (double eta : etas)
            for (double zeta : zetas) {
              const double inner =
                  std::min(std::pow(low - t, -g - zeta) * std::pow(t - s, a), std::pow(low - s, rho - zeta));
              const double den = std::pow(high - low, eta) * std::pow(low - t, -eta + zeta) * inner;
              best = std::max(best, safe_ratio(num, den));
            }
        }
  return best;
}

MultiParamFunction::MultiParamFunction(Values values, int arity, double alpha, double gamma)
    : values_(std::move(values)), arity_(arity), alpha_(alpha), gamma_(gamma) {
  check_exponents(alpha, gamma);
  if (arity < 0) throw PreconditionError("arity must be non-negative");
  if (!values_) throw PreconditionError("multi-parameter function needs values");
}

MultiParamFunction MultiParamFunction::separable(std::vector<std::function<double(double)>> factors, double alpha,
                                                 double gamma) {
  const int n = static_cast<int>(factors.size());
  return MultiParamFunction(
      [factors = std::move(factors)](double, std::span<const double> r) {
        double v = 1;
        for (std::size_t k = 0; k < factors.size(); ++k) v *= factors[k] ? factors[k](r[k]) : 1.0;
        return v;
      },
      n, alpha, gamma);
}

MultiParamFunction MultiParamFunction::constant(double c, int arity, double alpha, double gamma) {
  return MultiParamFunction([c](double, std::span<const double>) { return c; }, arity, alpha, gamma);
}

double MultiParamFunction::operator()(double s, std::span<const double> r) const {
  if (static_cast<int>(r.size()) != arity_) throw PreconditionError("wrong number of upper arguments");
  return values_(s, r);
}

double MultiParamFunction::diagonal(double s, double u) const {
  std::vector<double> r(arity_, u);
  return values_(s, r);
}

double multi_param_weight(double s, double t, double r, double u, double lowest, double alpha, double gamma,
                          double eta, double zeta) {
  const double inner =
      std::min(std::pow(lowest - t, -gamma - zeta) * std::pow(t - s, alpha), std::pow(lowest - s, alpha - gamma - zeta));
  return std::pow(std::abs(r - u), eta) * std::pow(lowest - t, -eta + zeta) * inner;
}

double empirical_norm_multi(const MultiParamFunction& y, int k, const std::vector<double>& grid,
                            const NormLattice& lattice) {
  check_grid(grid);
  if (k < 0 || k >= y.arity()) throw PreconditionError("argument index out of range");
  const auto etas = lattice.etas();
  const auto zetas = lattice.zetas(y.alpha() - y.gamma());
  const int n = static_cast<int>(grid.size());
  std::vector<double> upper(y.arity()), other(y.arity());
  double best = 0;
  // the arguments other than the k-th share one grid value w > t
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int w = j + 1; w < n; ++w)
        for (int a = j + 1; a < n; ++a)
          for (int b = a + 1; b < n; ++b) {
            const double s = grid[i], t = grid[j], r = grid[a], u = grid[b];
            std::fill(upper.begin(), upper.end(), grid[w]);
            std::fill(other.begin(), other.end(), grid[w]);
            upper[k] = r;
            other[k] = u;
            const double num = (y(t, upper) - y(s, upper)) - (y(t, other) - y(s, other));
            if (num == 0) continue;
            const double lowest = std::min({grid[w], r, u});
            for (double eta : etas)
              for (double zeta : zetas)
                best = std::max(best, safe_ratio(num, multi_param_weight(s, t, r, u, lowest, y.alpha(), y.gamma(),
                                                                         eta, zeta)));
          }
  return best;
}

double empirical_norm_multi(const MultiParamFunction& y, const std::vector<double>& grid,
                            const NormLattice& lattice) {
  double total = 0;
  for (int k = 0; k < y.arity(); ++k) total += empirical_norm_multi(y, k, grid, lattice);
  return total;
}

}  // namespace vbrp
