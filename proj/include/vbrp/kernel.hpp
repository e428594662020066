#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

namespace vbrp {

/// Two-time kernel k(τ, r), defined for τ > r, singular on the diagonal at order γ.
///
/// Besides pointwise values the kernel integrates itself over a cell [a, b] with
/// b <= τ, both plainly and against (r - a). Quadrature never evaluates k on the diagonal.
class VolterraKernel {
 public:
  class Model {
   public:
    virtual ~Model() = default;
    virtual double value(double tau, double r) const = 0;
    /// ∫_a^b k(τ, r) dr.
    virtual double integral(double tau, double a, double b) const;
    /// ∫_a^b k(τ, r) (r - a) dr.
    virtual double moment(double tau, double a, double b) const;
  };

  VolterraKernel(std::shared_ptr<const Model> model, double gamma, std::string name, bool constant = false);

  double operator()(double tau, double r) const { return model_->value(tau, r); }
  double integral(double tau, double a, double b) const;
  double moment(double tau, double a, double b) const;

  double gamma() const { return gamma_; }
  const std::string& name() const { return name_; }
  /// True when k does not depend on its arguments.
  bool is_constant() const { return constant_; }

 private:
  std::shared_ptr<const Model> model_;
  double gamma_;
  std::string name_;
  bool constant_;
};

/// k(τ, r) = (τ - r)^{-γ}; γ = 0 is the trivial kernel.
VolterraKernel make_fractional_kernel(double gamma);
/// k(τ, r) = exp(-λ(τ - r)), order 0.
VolterraKernel make_exponential_kernel(double lambda);
/// Arbitrary kernel; cell integrals fall back to tanh-sinh quadrature.
VolterraKernel make_custom_kernel(std::function<double(double, double)> k, double gamma, std::string name);

/// Largest sampled ratio of each side of the five kernel bounds to its right-hand side.
struct ConditionHReport {
  std::array<double, 5> constants{};
  std::size_t samples = 0;
  double declared_gamma = 0;

  bool finite() const;
};

ConditionHReport verify_condition_H(const VolterraKernel& k, double gamma, std::size_t samples, std::uint64_t seed,
                                    double horizon = 1.0);

}  // namespace vbrp
