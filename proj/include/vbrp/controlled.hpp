#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "vbrp/sewing.hpp"
#include "vbrp/signature.hpp"
#include "vbrp/vector_field.hpp"
#include "vbrp/volterra_function.hpp"

namespace vbrp {

/// p = ⌊1 / (α − γ)⌋, the number of tree grades a solution carries.
int truncation_level(double alpha, double gamma);
/// n = ⌊1 / α⌋, the alternative truncation exposed as an override.
int truncation_level_by_alpha(double alpha);

/// Chain-rule data of a tree h = h_1 ⋯ h_m, the root-merging product of its planted factors.
struct ChainRuleTerm {
  /// Planted factors identified with the nodes of h.
  std::vector<IdentifiedTree> factors;
  /// m, the order of the derivative D^m f.
  int order = 0;
  /// ∏ S(h_i) / S(h): weight of D^m f(y) ∏ y^{h_i} when every tree occurs once in the expansion.
  double coefficient = 0;
  /// 1/m!: weight of one ordered slot of the tensor y^{h_1} ⊗ ... ⊗ y^{h_m}.
  double slot_coefficient = 0;
  /// Distinct orderings of the factors, m! / ∏ (multiplicity)!.
  long long orderings = 0;
};

ChainRuleTerm chain_rule_term(const DecoratedTree& h);

/// Chain rule on point values of the components of a controlled path.
///
/// `trees[0]` must be the unit. apply() maps values y^h to the values f(y)^h.
class ChainRule {
 public:
  explicit ChainRule(std::vector<DecoratedTree> trees);

  const std::vector<DecoratedTree>& trees() const { return trees_; }
  /// Highest derivative order used by any tree.
  int max_order() const { return max_order_; }
  std::vector<double> apply(const VectorField& f, std::span<const double> values) const;

 private:
  struct Entry {
    std::vector<int> factors;
    int order = 0;
    double coefficient = 0;
  };
  std::vector<DecoratedTree> trees_;
  std::vector<Entry> entries_;
  int max_order_ = 0;
};

/// Controlled Volterra path over a lift, with a component y^h for every tree of grade < level.
///
/// Component h takes |h| + 1 upper arguments: argument 0 belongs to the root of h and
/// argument v to node v. Missing components are zero. The lift must outlive the path.
class ControlledPath {
 public:
  ControlledPath(const VolterraLift& lift, int level);

  /// Only the unit component, equal to c.
  static ControlledPath constant(const VolterraLift& lift, int level, double c);
  /// y = z^{e_i} with derivative y^{e_i} = 1 and nothing else.
  static ControlledPath canonical(const VolterraLift& lift, int level, Label i);

  const VolterraLift& lift() const { return *lift_; }
  int level() const { return level_; }
  /// Index trees: every tree with grade < level over the lift's labels, the unit first.
  const std::vector<DecoratedTree>& trees() const { return trees_; }

  void set(const DecoratedTree& h, MultiParamFunction y);
  bool has(const DecoratedTree& h) const;
  const MultiParamFunction& component(const DecoratedTree& h) const;
  /// y^{h, args}_s, zero for missing components.
  double operator()(const DecoratedTree& h, double s, std::span<const double> args) const;
  /// y^{h, u..u}_s.
  double diagonal(const DecoratedTree& h, double s, double u) const;
  /// No component on a tree that is neither the unit nor planted.
  bool is_hat() const;

  ControlledPath scaled(double lambda) const;
  friend ControlledPath operator+(const ControlledPath& a, const ControlledPath& b);

 private:
  const VolterraLift* lift_;
  int level_;
  std::vector<DecoratedTree> trees_;
  std::map<std::string, MultiParamFunction> components_;
};

/// Remainder R^h on sampled grid triples, free upper arguments all set to τ.
struct RemainderTable {
  DecoratedTree tree;
  /// Exponents ((n − |h|)α, (n − |h|)γ) of its norm.
  double alpha = 0;
  double gamma = 0;
  /// R^{h,τ}_{ts} for sampled positions i < j <= c, see RemainderReport::index.
  std::vector<double> values;
  double norm = 0;
};

struct RemainderReport {
  /// Grid indices of the sample points.
  std::vector<int> points;
  std::vector<RemainderTable> tables;
  double total_norm = 0;

  std::size_t index(int i, int j, int c) const;
  double value(std::size_t table, int i, int j, int c) const { return tables[table].values[index(i, j, c)]; }
  /// tree,s,t,tau,value rows.
  std::string to_csv() const;
};

/// Remainders R^h = y^h_{ts} − Σ c(σ, h, ρ) z^ρ_{ts} ★ y^σ_s for every index tree, on about
/// `samples` evenly spread grid points. Products use the star products of the lift grid.
RemainderReport remainders(const ControlledPath& y, int samples = 9);

/// ⦀z⦀: Σ over non-unit lift trees of the empirical ‖z^h‖_{(|h|ρ+γ, γ)} on sampled grid points.
double lift_norm(const VolterraLift& lift, int samples = 17);

/// Empirical ‖y‖_{z,(α,γ)} = Σ_h |y^h_0| + ‖y^h‖ + ‖R^h‖ on sampled grid points.
double controlled_norm(const ControlledPath& y, const RemainderReport& r, const NormLattice& lattice = {});

/// (1 + ⦀z⦀)^{p−1} · max(A, A^{p−1}), the shape bounding ‖f(y)‖ for A = Σ|y^h_0| + ‖y‖.
double composition_bound_shape(double base, double lift_norm, int p);

struct RoughIntegral {
  /// Sewing of Σ_{[u,v]} Σ_h z^{I_i(h),τ}_{vu} ★ y^h_u over coarsenings of [s, t].
  SewingResult sewing;
  /// Output path: w^{I_i(h)} = y^h, the unit component is ∫_0^t k(τ,r) y^r_r dq^i_r on the grid.
  ControlledPath path;

  double value() const { return sewing.checked_value(); }
};

/// Finest-level germ Σ_h z^{I_i(h),τ}_{cell} y^{h,a..a}_a of the grid cell [a, a+1].
double rough_cell_germ(const ControlledPath& y, Label i, int a, int tau);

/// Rough Volterra integral of y against the component i of the lift, with grid indices s <= t <= τ.
RoughIntegral rough_integral(const ControlledPath& y, Label i, int s, int t, int tau, const SewingOptions& opt = {});

/// f(y) by the chain rule; y must be a hat path and f must have enough derivatives.
ControlledPath compose(const VectorField& f, const ControlledPath& y);

}  // namespace vbrp
