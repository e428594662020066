#pragma once

#include <functional>
#include <span>
#include <vector>

#include "vbrp/signature.hpp"

namespace vbrp {

/// Sampling lattice for the auxiliary exponents η ∈ [0, 1] and ζ ∈ [0, ρ − ρ/16].
struct NormLattice {
  int eta_samples = 8;
  int zeta_samples = 8;

  std::vector<double> etas() const;
  std::vector<double> zetas(double rho) const;
};

/// Two-parameter path z^τ_t (t <= τ) with increments z^τ_{ts} = z^τ_t - z^τ_s.
class VolterraFunction {
 public:
  using Path = std::function<double(double t, double tau)>;

  VolterraFunction(Path path, double alpha, double gamma);
  /// Tabulated z^{h, x_c}_{x_b x_0} of one tree of a lift; queries must hit grid points.
  static VolterraFunction from_lift(const VolterraLift& lift, const DecoratedTree& h);

  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  double rho() const { return alpha_ - gamma_; }

  double operator()(double t, double tau) const { return path_(t, tau); }
  /// z^τ_{ts}.
  double increment(double s, double t, double tau) const { return path_(t, tau) - path_(s, tau); }
  /// z^{τ τ'}_{ts} = z^τ_t - z^{τ'}_t - z^τ_s + z^{τ'}_s.
  double increment2(double s, double t, double tau, double tau2) const;
  /// z^τ_0, required to be the same for every τ.
  double initial(double tau) const { return path_(0.0, tau); }

 private:
  Path path_;
  double alpha_;
  double gamma_;
};

/// Two-point quantity r^τ_{ts} of a lower interval [s, t] and an upper time τ.
using Increment = std::function<double(double s, double t, double tau)>;

/// sup over grid triples s < t <= τ of |r^τ_{ts}| / ([|τ−t|^{−γ}|t−s|^α] ∧ |τ−s|^{α−γ}); α may exceed 1.
double empirical_increment_norm(const Increment& r, const std::vector<double>& grid, double alpha, double gamma);

/// Empirical ‖z‖_{(α,γ),1} over grid triples s < t <= τ.
double empirical_norm_1(const VolterraFunction& z, const std::vector<double>& grid);
/// Empirical ‖z‖_{(α,γ),1,2} over grid quadruples s < t < τ' < τ and the exponent lattice.
double empirical_norm_12(const VolterraFunction& z, const std::vector<double>& grid, const NormLattice& lattice = {});

/// Function y_s^{r_1..r_n} of a base time and n upper arguments.
class MultiParamFunction {
 public:
  using Values = std::function<double(double s, std::span<const double> r)>;

  MultiParamFunction(Values values, int arity, double alpha, double gamma);
  /// y_s^{r_1..r_n} = ∏_k w_k(r_k), independent of s.
  static MultiParamFunction separable(std::vector<std::function<double(double)>> factors, double alpha,
                                      double gamma);
  /// Value that ignores every upper argument.
  static MultiParamFunction constant(double c, int arity, double alpha = 1.0, double gamma = 0.0);

  int arity() const { return arity_; }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  double operator()(double s, std::span<const double> r) const;
  /// y_s^{u,...,u}.
  double diagonal(double s, double u) const;

 private:
  Values values_;
  int arity_;
  double alpha_;
  double gamma_;
};

/// h_{η,ζ} of the multi-parameter norm for base times s < t and upper arguments with
/// the k-th one varied between r and u.
double multi_param_weight(double s, double t, double r, double u, double lowest, double alpha, double gamma,
                          double eta, double zeta);

/// Empirical ‖y‖_{(α,γ),n,k} for the k-th argument (0-based) over a grid.
double empirical_norm_multi(const MultiParamFunction& y, int k, const std::vector<double>& grid,
                            const NormLattice& lattice = {});
/// Sum over k of the empirical norms.
double empirical_norm_multi(const MultiParamFunction& y, const std::vector<double>& grid,
                            const NormLattice& lattice = {});

}  // namespace vbrp
