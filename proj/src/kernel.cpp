#include "vbrp/kernel.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <random>

#include "vbrp/error.hpp"

namespace vbrp {

namespace {

void check_cell(double tau, double a, double b) {
  if (!(a <= b) || b > tau * (1 + 1e-14) + 1e-300)
    throw PreconditionError("kernel cell integral requires a <= b <= tau");
}

class Fractional final : public VolterraKernel::Model {
 public:
  explicit Fractional(double gamma) : gamma_(gamma) {}

  double value(double tau, double r) const override { return gamma_ == 0 ? 1.0 : std::pow(tau - r, -gamma_); }

  double integral(double tau, double a, double b) const override {
    const double big = tau - a;
    const double h = b - a;
    if (h <= 0) return 0;
    if (gamma_ == 0) return h;
    const double e = 1 - gamma_;
    // A^{1-γ} (1 - (1 - h/A)^{1-γ}) / (1-γ), written to avoid cancellation.
    const double ratio = std::min(h / big, 1.0);
    return std::pow(big, e) * -std::expm1(e * std::log1p(-ratio)) / e;
  }

  double moment(double tau, double a, double b) const override {
    const double big = tau - a;
    const double h = b - a;
    if (h <= 0) return 0;
    if (gamma_ == 0) return 0.5 * h * h;
    const double u = std::min(h / big, 1.0);
    if (u < 0.25) {
      // ∫_0^h (A - x)^{-γ} x dx expanded in powers of h/A.
      double coeff = 1, sum = 0, up = 1;
      for (int k = 0; k < 60; ++k) {
        double term = coeff * up / (k + 2);
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
        coeff *= (gamma_ + k) / (k + 1);
        up *= u;
      }
      return std::pow(big, -gamma_) * h * h * sum;
    }
    const double lo = std::max(tau - b, 0.0);
    auto prim = [&](double w) {
      return big * std::pow(w, 1 - gamma_) / (1 - gamma_) - std::pow(w, 2 - gamma_) / (2 - gamma_);
    };
    return prim(big) - prim(lo);
  }

 private:
  double gamma_;
};

class Exponential final : public VolterraKernel::Model {
 public:
  explicit Exponential(double lambda) : lambda_(lambda) {}

  double value(double tau, double r) const override { return std::exp(-lambda_ * (tau - r)); }

  double integral(double tau, double a, double b) const override {
    const double h = b - a;
    if (h <= 0) return 0;
    if (lambda_ == 0) return h;
    return std::exp(-lambda_ * (tau - b)) * -std::expm1(-lambda_ * h) / lambda_;
  }

  double moment(double tau, double a, double b) const override {
    const double h = b - a;
    if (h <= 0) return 0;
    if (lambda_ == 0) return 0.5 * h * h;
    const double x = lambda_ * h;
    double inner;  // ∫_0^h e^{λx} x dx
    if (x < 0.5) {
      double sum = 0, p = 1;
      for (int k = 0; k < 40; ++k) {
        double term = p / (k + 2);
        sum += term;
        if (term < 1e-17 * sum) break;
        p *= x / (k + 1);
      }
      inner = h * h * sum;
    } else {
      inner = (std::exp(x) * (x - 1) + 1) / (lambda_ * lambda_);
    }
    return std::exp(-lambda_ * (tau - a)) * inner;
  }

 private:
  double lambda_;
};

class Custom final : public VolterraKernel::Model {
 public:
  explicit Custom(std::function<double(double, double)> k) : k_(std::move(k)) {}
  double value(double tau, double r) const override { return k_(tau, r); }

 private:
  std::function<double(double, double)> k_;
};

}  // namespace

double VolterraKernel::Model::integral(double tau, double a, double b) const {
  if (b <= a) return 0;
  boost::math::quadrature::tanh_sinh<double> q;
  return q.integrate([&](double r) { return value(tau, r); }, a, b);
}

double VolterraKernel::Model::moment(double tau, double a, double b) const {
  if (b <= a) return 0;
  boost::math::quadrature::tanh_sinh<double> q;
  return q.integrate([&](double r) { return value(tau, r) * (r - a); }, a, b);
}

VolterraKernel::VolterraKernel(std::shared_ptr<const Model> model, double gamma, std::string name, bool constant)
    : model_(std::move(model)), gamma_(gamma), name_(std::move(name)), constant_(constant) {
  if (!model_) throw PreconditionError("kernel: null model");
  if (!(gamma >= 0 && gamma < 1)) throw PreconditionError("kernel: order must lie in [0,1)");
}

double VolterraKernel::integral(double tau, double a, double b) const {
  check_cell(tau, a, b);
  return model_->integral(tau, a, std::min(b, tau));
}

double VolterraKernel::moment(double tau, double a, double b) const {
  check_cell(tau, a, b);
  return model_->moment(tau, a, std::min(b, tau));
}

VolterraKernel make_fractional_kernel(double gamma) {
  if (!(gamma >= 0 && gamma < 1)) throw PreconditionError("fractional kernel: gamma must lie in [0,1)");
  return VolterraKernel(std::make_shared<Fractional>(gamma), gamma, "fractional(gamma=" + std::to_string(gamma) + ")",
                        gamma == 0);
}

VolterraKernel make_exponential_kernel(double lambda) {
  if (!(lambda >= 0)) throw PreconditionError("exponential kernel: lambda must be >= 0");
  return VolterraKernel(std::make_shared<Exponential>(lambda), 0.0,
                        "exponential(lambda=" + std::to_string(lambda) + ")", lambda == 0);
}

VolterraKernel make_custom_kernel(std::function<double(double, double)> k, double gamma, std::string name) {
  return VolterraKernel(std::make_shared<Custom>(std::move(k)), gamma, std::move(name));
}

bool ConditionHReport::finite() const {
  return std::all_of(constants.begin(), constants.end(), [](double c) { return std::isfinite(c); });
}

ConditionHReport verify_condition_H(const VolterraKernel& k, double gamma, std::size_t samples, std::uint64_t seed,
                                    double horizon) {
  if (samples == 0) throw PreconditionError("verify_condition_H: samples must be > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ConditionHReport rep;
  rep.samples = samples;
  rep.declared_gamma = gamma;
  for (std::size_t n = 0; n < samples; ++n) {
    std::array<double, 4> p{unif(rng), unif(rng), unif(rng), unif(rng)};
    std::sort(p.begin(), p.end());
    const double s = horizon * p[0], r = horizon * p[1], q = horizon * p[2], tau = horizon * p[3];
    if (!(s < r && r < q && q < tau)) continue;
    const double eta = unif(rng), beta = unif(rng);
    const double k_tr = k(tau, r), k_qr = k(q, r), k_ts = k(tau, s), k_qs = k(q, s);
    for (double v : {k_tr, k_qr, k_ts, k_qs})
      if (!std::isfinite(v)) throw DiagnosticError("verify_condition_H: kernel undefined on a sampled point");
    const double mixed = std::abs(k_tr - k_qr - k_ts + k_qs);
    const std::array<double, 5> ratio{
        std::abs(k_tr) / std::pow(tau - r, -gamma),
        std::abs(k_tr - k_qr) / (std::pow(q - r, -gamma - eta) * std::pow(tau - q, eta)),
        std::abs(k_tr - k_ts) / (std::pow(tau - r, -gamma - eta) * std::pow(r - s, eta)),
        mixed / (std::pow(q - r, -gamma - beta) * std::pow(r - s, beta)),
        mixed / (std::pow(q - r, -gamma - eta) * std::pow(q - r, eta)),
    };
    for (int i = 0; i < 5; ++i) rep.constants[i] = std::max(rep.constants[i], ratio[i]);
  }
  return rep;
}

}  // namespace vbrp
