#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vbrp/driver.hpp"
#include "vbrp/kernel.hpp"
#include "vbrp/trees.hpp"

namespace vbrp {

/// Controls how tree integrals are discretized.
struct QuadratureOptions {
  /// Every driver cell is split into 2^refine equal sub-cells.
  int refine = 0;
  /// Use exact per-cell integration combined by the classical Chen relation when the kernel is constant.
  bool exact_constant = true;
};

inline constexpr int max_refine = 20;
/// Largest number of sub-cells a single quadrature grid may hold.
inline constexpr int max_quadrature_cells = 1 << 16;

/// z^{h,tau}_{ts}: the iterated Volterra integral of q indexed by h.
double iterated_integral(const DecoratedTree& h, const VolterraKernel& k, const DriverPath& q, double s, double t,
                         double tau, const QuadratureOptions& opt = {});

struct PartialIntegral {
  double value = 0;
  /// Some fixed value sits on an interior driver grid point, where the right slope was used.
  bool kink = false;
};

/// The integrand with the variables of `nodes` fixed at `values` and q̇ factors at those nodes.
PartialIntegral iterated_integral_partial(const DecoratedTree& h, const std::vector<int>& nodes,
                                          const std::vector<double>& values, const VolterraKernel& k,
                                          const DriverPath& q, double s, double t, double tau,
                                          const QuadratureOptions& opt = {});

/// ∏_i z^{h_i, taus[i]}_{ts}.
double forest_integral(const Forest& f, const std::vector<double>& taus, const VolterraKernel& k, const DriverPath& q,
                       double s, double t, const QuadratureOptions& opt = {});

/// Node weight for weighted integrals; an empty function stands for 1.
using NodeWeight = std::function<double(double)>;

/// ∫ z̄^{h,tau}_{ts}((r_v)) ∏_v w_v(r_v) dr: the smooth convolution of z^h with a separable
/// function of its node variables. `weights` is indexed by canonical node of h.
double weighted_integral(const DecoratedTree& h, const std::vector<NodeWeight>& weights, const VolterraKernel& k,
                         const DriverPath& q, double s, double t, double tau, const QuadratureOptions& opt = {});

/// Both sides of the generalized Chen relation for one tree.
struct ChenEvaluation {
  double lhs = 0;
  double rhs = 0;
  double residual() const;
};

/// Evaluates z^{h,tau}_{ts} and Σ z^{h1,tau}_{tu} ★ z^{h2,·}_{us} for every tree, sharing work.
std::vector<ChenEvaluation> chen_evaluate(const std::vector<DecoratedTree>& trees, const VolterraKernel& k,
                                          const DriverPath& q, double s, double u, double t, double tau,
                                          const QuadratureOptions& opt = {});

double chen_residual(const DecoratedTree& h, const VolterraKernel& k, const DriverPath& q, double s, double u,
                     double t, double tau, const QuadratureOptions& opt = {});

/// Operator form of the Chen relation for a separable test function f(r_v) = ∏_v w_v(r_v):
/// lhs = (z_ts - z_tu - z_us) ★ f and rhs = Σ' z^{h1,tau}_{tu} ★ (z^{h2}_{us} ★ f).
ChenEvaluation operator_chen(const DecoratedTree& h, const std::vector<NodeWeight>& weights, const VolterraKernel& k,
                             const DriverPath& q, double s, double u, double t, double tau,
                             const QuadratureOptions& opt = {});

struct LiftConfig {
  int n = 2;
  double alpha = 0.5;
  double gamma = 0.0;
  int refine = 2;
  /// Store every (s, t, tau) on the driver grid; otherwise only single cells.
  bool full_tables = true;
  bool exact_constant = true;
  /// Number of sampled (s, u, t, tau) for the Chen report; 0 skips the report.
  int chen_samples = 4;
  std::uint64_t seed = 1;
};

struct ChenSample {
  double s = 0, u = 0, t = 0, tau = 0;
  std::string tree;
  double residual = 0;
  double residual_fine = 0;
};

struct ChenReport {
  double max_residual = 0;
  double max_residual_fine = 0;
  /// Ten times the largest residual one refinement level finer.
  double tolerance = 0;
  bool conforming = true;
  bool computed = false;
  std::vector<ChenSample> samples;
};

/// Tree-indexed tables z^{h,tau}_{ts} over the driver grid.
class VolterraLift {
 public:
  struct Query {
    double value = 0;
    bool interpolated = false;
  };

  const std::vector<DecoratedTree>& trees() const { return trees_; }
  bool has(const DecoratedTree& h) const;
  const std::vector<double>& grid() const { return driver_.times(); }
  int cells() const { return driver_.cells(); }
  bool full_tables() const { return full_; }

  /// z^{h, x_c}_{x_b x_a} for grid indices a <= b <= c; cell tables only answer b = a + 1.
  double value(const DecoratedTree& h, int a, int b, int c) const;
  double cell(const DecoratedTree& h, int l, int c) const { return value(h, l, l + 1, c); }
  /// Value at arbitrary times, interpolated multilinearly between grid points when needed.
  Query at(const DecoratedTree& h, double s, double t, double tau) const;

  const VolterraKernel& kernel() const { return kernel_; }
  const DriverPath& driver() const { return driver_; }
  const LiftConfig& config() const { return config_; }
  double rho() const { return config_.alpha - config_.gamma; }
  const ChenReport& chen_report() const { return report_; }
  /// Largest absolute table entry of each tree, for the boundedness report.
  std::vector<double> sup_norms() const;

  /// One CSV per tree named by its serialization, plus manifest.json.
  void export_csv(const std::string& dir) const;

 private:
  friend VolterraLift build_lift(const VolterraKernel& k, const DriverPath& q, const LiftConfig& cfg);
  VolterraLift(VolterraKernel k, DriverPath q, LiftConfig cfg) : kernel_(std::move(k)), driver_(std::move(q)), config_(cfg) {}
  int tree_index(const DecoratedTree& h) const;
  std::size_t slot(int a, int b, int c) const;

  VolterraKernel kernel_;
  DriverPath driver_;
  LiftConfig config_;
  bool full_ = true;
  std::vector<DecoratedTree> trees_;
  std::vector<std::string> keys_;
  std::vector<std::vector<double>> tables_;
  std::vector<std::size_t> offsets_;
  ChenReport report_;
};

/// Computes the tables for all trees of grade <= n with labels 0..d and the Chen report.
VolterraLift build_lift(const VolterraKernel& k, const DriverPath& q, const LiftConfig& cfg);

/// Chen residuals at refine and refine + 1 for random grid (s, t, tau) and a split point u off the grid.
ChenReport chen_report(const std::vector<DecoratedTree>& trees, const VolterraKernel& k, const DriverPath& q,
                       int refine, int samples, std::uint64_t seed, bool exact_constant = true);

}  // namespace vbrp
