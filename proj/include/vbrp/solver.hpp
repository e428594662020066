#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vbrp/controlled.hpp"
#include "vbrp/sewing.hpp"
#include "vbrp/signature.hpp"
#include "vbrp/vector_field.hpp"

namespace vbrp {

struct SolveConfig {
  /// Initial window length T̄; 0 starts from the whole horizon.
  double window = 0;
  /// Exponent of the contraction metric; 0 selects the default.
  double beta = 0;
  /// Truncation level p; 0 selects ⌊1 / (α − γ)⌋.
  int truncation = 0;
  int max_iterations = 60;
  /// Picard iterations stop once successive iterates are this close in the contraction metric.
  double tolerance = 1e-10;
  /// Ratios at or above θ_max count as a failure to contract.
  double max_ratio = 0.999;
  /// Consecutive non-contracting iterations that fail a window.
  int patience = 3;
  /// Window halvings before giving up.
  int max_halvings = 12;
  /// Grid points per window used by the contraction metric.
  int norm_samples = 17;
  /// For p = 1, add the linear interpolation of f(y) across each cell to the germ.
  bool trapezoid = true;
  /// Sew the final germ of every window as a diagnostic.
  bool sewing_diagnostic = true;
  SewingOptions sewing;
};

/// β = α for p = 1, otherwise max(γ + 1/(p−1), α − (α−γ)/4) clipped to α.
double default_beta(double alpha, double gamma, int p);

/// Picard map of the equation y^τ_t = y^τ_a + Σ_i ∫_a^t k(τ,r) f_i(y^r_r) dq^i_r on one window [a, b].
///
/// A state holds, for every window grid point, the diagonal values of the components
/// y^h over the index trees, together with the two-parameter values of the path on the
/// sampled pairs used by the contraction metric.
class PicardMap {
 public:
  struct State {
    /// values[j][k]: component trees()[k] at window point j.
    std::vector<std::vector<double>> values;
    /// path[jc]: y^{τ_c}_{t_j} for sampled positions j <= c, packed row by row.
    std::vector<double> path;
  };

  /// `history[c − first]` is the value y^{τ_c}_{t_first} for grid indices c >= first; `fields[i]`
  /// drives component i of the lift (component 0 is time).
  PicardMap(const VolterraLift& lift, std::vector<VectorField> fields, int first, int last, std::vector<double> history,
            const SolveConfig& cfg);

  int first() const { return first_; }
  int last() const { return last_; }
  int truncation() const { return p_; }
  double beta() const { return beta_; }
  const std::vector<DecoratedTree>& trees() const { return chain_.trees(); }
  const std::vector<int>& samples() const { return samples_; }

  /// Path values frozen at the history and derivative components zero.
  State initial() const;
  /// State whose diagonal path values are given at every window point.
  State from_diagonal(const std::vector<double>& diagonal) const;
  /// One application of the map.
  State apply(const State& y) const;
  /// Empirical controlled norm of the difference of two states: initial values, the (β,γ)
  /// norm of the path, β-Hölder norms of the derivative components and the (pβ,pγ) norm
  /// of the path remainder. Remainder terms whose lift values are unavailable are left out.
  double distance(const State& a, const State& b) const;

  /// y^{τ_c}_{t_j} for every window point j and every grid index c >= j, given the state the map was applied to.
  std::vector<std::vector<double>> extend(const State& input) const;
  /// Dyadic sums of the germ over coarsenings of the window at τ = last, when the lift allows it.
  std::optional<SewingResult> sew(const State& input) const;

 private:
  std::vector<std::vector<double>> field_values(const State& y) const;
  double germ(const std::vector<std::vector<double>>& fv, int l, int c) const;
  std::size_t pair(int j, int c) const;

  const VolterraLift* lift_;
  std::vector<VectorField> fields_;
  int first_, last_;
  std::vector<double> history_;
  SolveConfig cfg_;
  int p_ = 1;
  double beta_ = 0;
  ChainRule chain_;
  /// For every label i and index tree h, the tree I_i(h) when it has grade <= p.
  struct Grafted {
    Label label;
    int source;
    int target;
    std::vector<double> cells;
  };
  std::vector<Grafted> grafted_;
  /// moments_[i][(l − first) * stride + c] = ∫ over cell l of k(τ_c, r)(r − t_l) dq^i_r.
  std::vector<std::vector<double>> moments_;
  std::vector<int> samples_;
  int stride_ = 0;
};

struct WindowReport {
  int first = 0, last = 0;
  double start = 0, end = 0;
  int iterations = 0;
  bool converged = false;
  /// Distances between successive iterates and their ratios.
  std::vector<double> distances;
  std::vector<double> ratios;
  double max_ratio = 0;
  /// Geometric mean of the counted ratios, the observed contraction rate.
  double mean_ratio = 0;
  /// Distance between the accepted iterate and its image.
  double residual = 0;
  std::optional<SewingResult> sewing;
  std::string message;
};

struct WindowSolution {
  /// Accepted iterate; the window solution is its image under the map.
  PicardMap::State state;
  WindowReport report;
};

/// Picard iteration on one window; throws DiagnosticError when the map does not contract.
WindowSolution solve_window(const PicardMap& map, const SolveConfig& cfg,
                            const std::optional<PicardMap::State>& guess = std::nullopt);

struct Solution {
  std::vector<double> times;
  /// y^{τ_c}_{t_j} at index j * (cells + 1) + c, zero below the diagonal.
  std::vector<double> table;
  /// y_t = y^t_t at every grid point.
  std::vector<double> path;
  /// Diagonal values of every index tree component, [point][tree].
  std::vector<std::vector<double>> components;
  std::vector<DecoratedTree> trees;
  std::vector<WindowReport> windows;
  double window_length = 0;
  int halvings = 0;
  int truncation = 1;
  double beta = 0;

  /// y^{τ}_t for grid indices t <= τ.
  double value(int t, int tau) const;
  /// t,y rows.
  std::string to_csv() const;
  /// Structured per-window report.
  std::string report_json() const;
};

/// Window-by-window solution on [0, T] with y^τ_0 = y0 for every τ.
Solution solve(double y0, const std::vector<VectorField>& fields, const VolterraLift& lift,
               const SolveConfig& cfg = {});

}  // namespace vbrp
