#include "vbrp/sewing.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "vbrp/driver.hpp"
#include "vbrp/error.hpp"

namespace vbrp {

double delta(const std::function<double(double, double)>& f, double s, double u, double t) {
  if (!(s <= u && u <= t)) throw PreconditionError("delta needs s <= u <= t");
  return f(s, t) - f(u, t) - f(s, u);
}

AbstractIntegrand AbstractIntegrand::simple(std::function<double(double, double, double)> germ, double alpha,
                                            double gamma, double beta, double kappa) {
  AbstractIntegrand xi;
  xi.germ = [germ = std::move(germ)](double, double s, double t, double tau) { return germ(s, t, tau); };
  xi.alpha = alpha;
  xi.gamma = gamma;
  xi.beta = beta;
  xi.kappa = kappa;
  return xi;
}

void AbstractIntegrand::check() const {
  if (!germ) throw PreconditionError("integrand has no germ");
  if (!(beta > 1)) throw PreconditionError("sewing needs beta > 1");
  if (!(kappa + theta > 0 && kappa + theta < 1)) throw PreconditionError("sewing needs kappa + theta in (0, 1)");
  if (!(gamma + eta > 0 && gamma + eta < 1) && !(gamma == 0 && eta == 0))
    throw PreconditionError("sewing needs gamma + eta in (0, 1)");
  if (!(alpha > gamma)) throw PreconditionError("sewing needs alpha > gamma");
}

double AbstractIntegrand::remainder_shape(double v, double s, double t, double tau) const {
  const double far = std::pow(tau - v, beta - kappa - theta);
  if (tau == t || (s == v && theta > 0)) return far;
  return std::min(std::pow(tau - t, -kappa) * std::pow(t - s, beta) * std::pow(s - v, -theta), far);
}

double SewingResult::checked_value() const {
  if (!converged) throw DiagnosticError("sewing sums are not Cauchy: " + message);
  return value;
}

std::string SewingResult::to_csv() const {
  std::ostringstream out;
  out << "level,sum,diff,ratio\n";
  for (const auto& l : levels)
    out << l.level << ',' << format_double(l.sum) << ',' << format_double(l.diff) << ',' << format_double(l.ratio)
        << '\n';
  return out.str();
}

SewingResult accept_dyadic(const std::vector<double>& sums, int first_level, const SewingOptions& opt) {
  SewingResult r;
  if (sums.empty()) throw PreconditionError("no partial sums");
  for (std::size_t i = 0; i < sums.size(); ++i) {
    SewingLevel l;
    l.level = first_level + static_cast<int>(i);
    l.sum = sums[i];
    if (i > 0) l.diff = std::abs(sums[i] - sums[i - 1]);
    if (i > 1) l.ratio = r.levels.back().diff > 0 ? l.diff / r.levels.back().diff : 0;
    r.levels.push_back(l);
  }
  r.last_sum = sums.back();
  const double scale = std::max(1.0, std::abs(r.last_sum));
  bool all_small = true;
  for (std::size_t i = 1; i < r.levels.size(); ++i) all_small = all_small && r.levels[i].diff <= opt.exact_floor * scale;
  if (all_small) {
    r.converged = r.exact = true;
    r.value = r.last_sum;
    r.empirical_beta = std::numeric_limits<double>::infinity();
    r.message = "exact";
    return r;
  }

  // least-squares slope of log2 |diff| over the levels from rate_from on
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 1; i < r.levels.size(); ++i) {
    const auto& l = r.levels[i];
    if (l.level < opt.rate_from || !(l.diff > 0)) continue;
    sx += l.level;
    sy += std::log2(l.diff);
    sxx += static_cast<double>(l.level) * l.level;
    sxy += l.level * std::log2(l.diff);
    ++count;
  }
  if (count >= 2) r.empirical_beta = 1 - (count * sxy - sx * sy) / (count * sxx - sx * sx);

  const std::size_t n = r.levels.size();
  if (n < 4) {
    r.value = std::numeric_limits<double>::quiet_NaN();
    r.message = "fewer than three differences";
    return r;
  }
  for (std::size_t i = n - 2; i < n; ++i)
    if (!(r.levels[i].diff < r.levels[i - 1].diff)) {
      r.value = std::numeric_limits<double>::quiet_NaN();
      r.message = "differences stopped decreasing at level " + std::to_string(r.levels[i].level);
      return r;
    }
  if (!(r.levels[n - 1].diff < opt.tolerance * scale)) {
    r.value = std::numeric_limits<double>::quiet_NaN();
    r.message = "last difference " + format_double(r.levels[n - 1].diff) + " above tolerance";
    return r;
  }
  r.converged = true;
  const double q = r.levels[n - 1].diff / r.levels[n - 2].diff;
  const double last_step = sums[n - 1] - sums[n - 2];
  r.value = r.last_sum + last_step * q / (1 - q);
  r.message = "converged";
  return r;
}

double dyadic_sum(const AbstractIntegrand& xi, double v, double s, double t, double tau, int level) {
  const long long cells = 1LL << level;
  const double h = (t - s) / static_cast<double>(cells);
  double acc = 0;
  for (long long i = 0; i < cells; ++i) {
    const double a = s + h * static_cast<double>(i);
    const double b = i + 1 == cells ? t : s + h * static_cast<double>(i + 1);
    acc += xi.germ(v, a, b, tau);
  }
  return acc;
}

namespace {

SewingResult sew(const AbstractIntegrand& xi, double v, double s, double t, double tau, const SewingOptions& opt) {
  std::vector<double> sums;
  for (int level = opt.min_level; level <= opt.max_level; ++level) sums.push_back(dyadic_sum(xi, v, s, t, tau, level));
  return accept_dyadic(sums, opt.min_level, opt);
}

}  // namespace

SewingResult sewing_integrate(const AbstractIntegrand& xi, double v, double s, double t, double tau,
                              const SewingOptions& opt) {
  xi.check();
  if (!(v <= s && s <= t && t <= tau)) throw PreconditionError("sewing needs v <= s <= t <= tau");
  if (opt.min_level < 0 || opt.max_level < opt.min_level) throw PreconditionError("invalid sewing levels");
  if (opt.max_level > 24) throw ResourceError("sewing levels above 24 are not supported");
  auto r = sew(xi, v, s, t, tau, opt);
  if (s == t) return r;
  for (int j = 0; j < opt.remainder_samples; ++j) {
    const double sub_t = s + (t - s) / std::ldexp(1.0, j);
    SewingOptions inner = opt;
    inner.remainder_samples = 0;
    const auto sub = sew(xi, v, s, sub_t, tau, inner);
    const double sewn = sub.converged ? sub.value : sub.last_sum;
    const double shape = xi.remainder_shape(v, s, sub_t, tau);
    if (shape > 0) r.remainder_constant = std::max(r.remainder_constant, std::abs(sewn - xi.germ(v, s, sub_t, tau)) / shape);
  }
  return r;
}

SewingResult sewing_integrate(const AbstractIntegrand& xi, double s, double t, double tau, const SewingOptions& opt) {
  return sewing_integrate(xi, s, s, t, tau, opt);
}

}  // namespace vbrp
