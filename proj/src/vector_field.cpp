#include "vbrp/vector_field.hpp"

#include <algorithm>
#include <cmath>

#include "vbrp/driver.hpp"
#include "vbrp/error.hpp"

namespace vbrp {

VectorField::VectorField(std::vector<Fn> derivatives, std::string name)
    : derivatives_(std::move(derivatives)), name_(std::move(name)) {
  if (derivatives_.empty()) throw PreconditionError("a vector field needs at least its values");
  for (const auto& d : derivatives_)
    if (!d) throw PreconditionError("vector field derivative is empty");
}

VectorField VectorField::zero() {
  VectorField f = constant(0.0);
  f.name_ = "zero";
  f.zero_ = true;
  return f;
}

VectorField VectorField::constant(double c) {
  auto f = polynomial({c});
  f.name_ = "constant(" + format_double(c) + ")";
  return f;
}

VectorField VectorField::polynomial(const std::vector<double>& coefficients, int order) {
  if (order < 0) throw PreconditionError("derivative order must be non-negative");
  std::vector<Fn> ds;
  std::vector<double> c = coefficients;
  for (int m = 0; m <= order; ++m) {
    ds.emplace_back([c](double x) {
      double acc = 0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
      return acc;
    });
    std::vector<double> next;
    for (std::size_t k = 1; k < c.size(); ++k) next.push_back(c[k] * static_cast<double>(k));
    c = std::move(next);
  }
  std::string name = "poly(";
  for (std::size_t k = 0; k < coefficients.size(); ++k) name += (k ? "," : "") + format_double(coefficients[k]);
  return VectorField(std::move(ds), name + ")");
}

VectorField VectorField::sine(double amplitude, double frequency, double phase, int order) {
  if (order < 0) throw PreconditionError("derivative order must be non-negative");
  std::vector<Fn> ds;
  for (int m = 0; m <= order; ++m) {
    const double scale = amplitude * std::pow(frequency, m);
    const double shift = phase + m * M_PI / 2;
    ds.emplace_back([=](double x) { return scale * std::sin(frequency * x + shift); });
  }
  return VectorField(std::move(ds), "sine(" + format_double(amplitude) + "," + format_double(frequency) + "," +
                                        format_double(phase) + ")");
}

double VectorField::derivative(int m, double x) const {
  if (m < 0 || m > order())
    throw PreconditionError("vector field " + name_ + " has no derivative of order " + std::to_string(m));
  return derivatives_[m](x);
}

std::vector<double> VectorField::bound_constants(double radius, int samples) const {
  if (samples < 2 || !(radius >= 0)) throw PreconditionError("bound sampling needs two points and a radius >= 0");
  std::vector<double> out(derivatives_.size(), 0.0);
  for (int i = 0; i < samples; ++i) {
    const double x = -radius + 2 * radius * i / (samples - 1);
    for (std::size_t m = 0; m < derivatives_.size(); ++m) out[m] = std::max(out[m], std::abs(derivatives_[m](x)));
  }
  return out;
}

double derivative_consistency(const VectorField& f, std::span<const double> points, double step) {
  if (!(step > 0)) throw PreconditionError("finite difference step must be positive");
  double worst = 0;
  for (double x : points)
    for (int m = 0; m < f.order(); ++m) {
      const double fd = (f.derivative(m, x + step) - f.derivative(m, x - step)) / (2 * step);
      const double exact = f.derivative(m + 1, x);
      worst = std::max(worst, std::abs(fd - exact) / std::max(1.0, std::abs(exact)));
    }
  return worst;
}

}  // namespace vbrp
