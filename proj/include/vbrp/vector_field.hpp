#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace vbrp {

/// Scalar vector field f: R -> R together with its derivatives D^m f, m <= order().
class VectorField {
 public:
  using Fn = std::function<double(double)>;

  /// `derivatives[m]` evaluates D^m f; entry 0 is f itself.
  VectorField(std::vector<Fn> derivatives, std::string name);

  static VectorField zero();
  static VectorField constant(double c);
  /// f(x) = Σ_k coefficients[k] x^k; derivatives above the degree vanish.
  static VectorField polynomial(const std::vector<double>& coefficients, int order = 8);
  /// f(x) = amplitude · sin(frequency · x + phase).
  static VectorField sine(double amplitude = 1, double frequency = 1, double phase = 0, int order = 8);

  const std::string& name() const { return name_; }
  /// Highest available derivative.
  int order() const { return static_cast<int>(derivatives_.size()) - 1; }
  bool is_zero() const { return zero_; }

  double operator()(double x) const { return derivatives_[0](x); }
  /// D^m f(x); throws PreconditionError when m exceeds order().
  double derivative(int m, double x) const;

  /// sup |D^m f| over an evenly sampled interval [-radius, radius], for m = 0..order().
  std::vector<double> bound_constants(double radius, int samples = 1001) const;

 private:
  std::vector<Fn> derivatives_;
  std::string name_;
  bool zero_ = false;
};

/// Largest |central difference of D^m f − D^{m+1} f| / max(1, |D^{m+1} f|) over the points and m < order().
double derivative_consistency(const VectorField& f, std::span<const double> points, double step = 1e-5);

}  // namespace vbrp
