#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace vbrp::oracle {

/// Reference solution of y_t = y0 + ∫_0^t (t−r)^{−γ} [f(y_r) q̇(r) + g(y_r)] dr on a uniform grid of [0, 1].
///
/// Product trapezoid rule: the integrand is interpolated linearly on every cell and integrated
/// exactly against the kernel. The implicit end-point term is resolved by a scalar fixed point.
inline std::vector<double> product_trapezoid(double y0, double gamma, int cells, const std::function<double(double)>& f,
                                             const std::function<double(double)>& driver_rate,
                                             const std::function<double(double)>& g) {
  const double h = 1.0 / cells, e = 1 - gamma;
  // weights by lag k = j − l for the left and right end of cell l seen from t_j
  std::vector<double> left(cells + 1, 0.0), right(cells + 1, 0.0);
  for (int k = 1; k <= cells; ++k) {
    const double a = k * h, b = (k - 1) * h;
    const double mass = (std::pow(a, e) - std::pow(b, e)) / e;
    const double moment = a * mass - (std::pow(a, e + 1) - std::pow(b, e + 1)) / (e + 1);
    right[k] = moment / h;
    left[k] = mass - right[k];
  }
  std::vector<double> y(cells + 1, y0), rhs(cells + 1, 0.0);
  auto integrand = [&](int j, double v) { return f(v) * driver_rate(j * h) + g(v); };
  rhs[0] = integrand(0, y0);
  for (int j = 1; j <= cells; ++j) {
    double acc = y0 + left[1] * rhs[j - 1];
    for (int l = 0; l + 1 < j; ++l) acc += left[j - l] * rhs[l] + right[j - l] * rhs[l + 1];
    double v = y[j - 1];
    for (int it = 0; it < 200; ++it) {
      const double next = acc + right[1] * integrand(j, v);
      const bool done = std::abs(next - v) <= 1e-15 * std::max(1.0, std::abs(v));
      v = next;
      if (done) break;
    }
    y[j] = v;
    rhs[j] = integrand(j, v);
  }
  return y;
}

}  // namespace vbrp::oracle
