#pragma once

#include "vbrp/sewing.hpp"
#include "vbrp/signature.hpp"
#include "vbrp/volterra_function.hpp"

namespace vbrp {

struct StarResult {
  SewingResult sewing;
  /// |result| divided by the shape of its a priori bound, for the boundedness report.
  double bound_constant = 0;

  double value() const { return sewing.checked_value(); }
};

/// z^τ_{tu} ★ y^·_{us} = lim Σ_{[a,b]} z^τ_{ba} y^a_{us} over dyadic partitions of [u, t].
StarResult star_base(const VolterraFunction& z, const VolterraFunction& y, double s, double u, double t, double tau,
                     const SewingOptions& opt = {});

/// One dyadic Riemann sum of star_base.
double star_base_sum(const VolterraFunction& z, const VolterraFunction& y, double s, double u, double t, double tau,
                     int level);

struct StarTreeOptions {
  SewingOptions sewing;
  /// Also compute the star product with y - y^{s,...,s} and its bound constant.
  bool bounds = false;
};

/// z^{h,τ}_{ts} ★ y_s over the grid of a lift, with s, t, τ given as grid indices.
///
/// Argument k of y belongs to the decorated node k + 1 of h. Partitions are the dyadic
/// coarsenings of the grid points in [s, t]; inner products run on the full grid.
StarResult star_tree(const VolterraLift& lift, const DecoratedTree& h, const MultiParamFunction& y, int s, int t,
                     int tau, const StarTreeOptions& opt = {});

/// Partial sums of star_tree, one per coarsening level from a single cell up to the grid.
std::vector<double> star_tree_sums(const VolterraLift& lift, const DecoratedTree& h, const MultiParamFunction& y,
                                   int s, int t, int tau);

/// One partial sum of star_tree; levels beyond the grid resolution give the finest sum.
double star_tree_sum(const VolterraLift& lift, const DecoratedTree& h, const MultiParamFunction& y, int s, int t,
                     int tau, int level);

/// Coarsening of the grid indices lo..hi into 2^level nearly equal parts.
std::vector<int> coarsening(int lo, int hi, int level);
/// Smallest level at which coarsening(lo, lo + cells, level) reaches every grid point.
int finest_level(int cells);

}  // namespace vbrp
