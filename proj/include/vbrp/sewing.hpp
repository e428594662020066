#pragma once

#include <functional>
#include <string>
#include <vector>

namespace vbrp {

/// (δ f)_{tus} = f_{ts} - f_{tu} - f_{us} for a two-parameter function f(s, t).
double delta(const std::function<double(double s, double t)>& f, double s, double u, double t);

/// Abstract Volterra integrand (Ξ^τ_v)_{ts} with its declared exponents.
struct AbstractIntegrand {
  std::function<double(double v, double s, double t, double tau)> germ;
  double alpha = 1, gamma = 0, eta = 0;
  double beta = 2, kappa = 0.5, theta = 0;

  /// Integrand without dependence on v.
  static AbstractIntegrand simple(std::function<double(double s, double t, double tau)> germ, double alpha,
                                  double gamma, double beta, double kappa);
  /// Throws unless the hypotheses of the sewing lemma hold for the declared exponents.
  void check() const;
  /// Right-hand side shape of the remainder bound for (v, s, t, τ).
  double remainder_shape(double v, double s, double t, double tau) const;
};

struct SewingOptions {
  int min_level = 0;
  int max_level = 10;
  /// Relative size of the last dyadic difference needed for acceptance.
  double tolerance = 1e-3;
  /// Differences below this absolute size count as an exact sequence.
  double exact_floor = 1e-14;
  /// Lowest level used in the rate regression.
  int rate_from = 4;
  /// Number of dyadic sub-intervals on which the remainder bound is sampled, 0 to skip.
  int remainder_samples = 8;
};

struct SewingLevel {
  int level = 0;
  double sum = 0;
  double diff = 0;
  double ratio = 0;
};

/// Outcome of a dyadic sewing limit. `value` is NaN unless the sequence was accepted.
struct SewingResult {
  double value = 0;
  double last_sum = 0;
  std::vector<SewingLevel> levels;
  bool converged = false;
  bool exact = false;
  std::string message;
  /// β̂ from a least-squares fit of log2 |difference| against level: differences ~ 2^{-(β̂-1) level}.
  double empirical_beta = 0;
  /// Largest |I(Ξ) - Ξ| / shape over the sampled sub-intervals.
  double remainder_constant = 0;

  /// Accepted value, or DiagnosticError.
  double checked_value() const;
  /// Rows `level,sum,diff,ratio`.
  std::string to_csv() const;
};

/// Accepts a sequence of partial sums indexed by dyadic level.
///
/// Accepted when every difference is below the floor, or when the last three differences
/// decrease and the last one is below tolerance. The value adds the geometric tail predicted
/// by the last two differences to the last sum.
SewingResult accept_dyadic(const std::vector<double>& sums, int first_level, const SewingOptions& opt);

/// lim Σ_{[a,b] ∈ P} (Ξ^τ_v)_{ba} over the dyadic partitions of [s, t].
SewingResult sewing_integrate(const AbstractIntegrand& xi, double v, double s, double t, double tau,
                              const SewingOptions& opt = {});
SewingResult sewing_integrate(const AbstractIntegrand& xi, double s, double t, double tau,
                              const SewingOptions& opt = {});

/// Dyadic Riemann sum of Ξ over [s, t] at one level.
double dyadic_sum(const AbstractIntegrand& xi, double v, double s, double t, double tau, int level);

}  // namespace vbrp
