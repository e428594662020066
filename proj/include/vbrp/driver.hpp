#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vbrp {

/// Piecewise-linear path in R^{d+1} sampled on a strictly increasing grid.
/// Component 0 is the time itself.
class DriverPath {
 public:
  /// `components[i]` holds the samples of q^{i+1}; the time component is added.
  DriverPath(std::vector<double> times, std::vector<std::vector<double>> components);

  int dim() const { return static_cast<int>(values_.size()) - 1; }
  int cells() const { return static_cast<int>(times_.size()) - 1; }
  const std::vector<double>& times() const { return times_; }
  double time(int j) const { return times_[j]; }
  double horizon() const { return times_.back(); }
  double value(int j, int i) const { return values_[i][j]; }
  const std::vector<double>& component(int i) const { return values_[i]; }
  double increment(int cell, int i) const { return values_[i][cell + 1] - values_[i][cell]; }
  double slope(int cell, int i) const { return increment(cell, i) / (times_[cell + 1] - times_[cell]); }

  /// Piecewise-linear interpolant.
  double operator()(double t, int i) const;
  /// Cell l with t_l <= t < t_{l+1}; the final point belongs to the last cell.
  int cell_of(double t) const;
  /// Grid index of t within a relative tolerance, or -1.
  int index_of(double t, double tol = 1e-12) const;
  /// True if t coincides with an interior grid point.
  bool is_kink(double t, double tol = 1e-12) const;

  /// Same path on a grid with every cell split into 2^levels equal parts.
  DriverPath refined(int levels) const;
  /// Path with every non-time component multiplied by lambda.
  DriverPath scaled(double lambda) const;

  std::string to_csv() const;
  static DriverPath from_csv(std::string_view text);
  void write_csv(const std::string& path) const;
  static DriverPath read_csv(const std::string& path);

  /// FNV-1a hash of the CSV text.
  std::uint64_t hash() const;

 private:
  std::vector<double> times_;
  std::vector<std::vector<double>> values_;
};

std::vector<double> uniform_grid(double horizon, int cells);

/// Samples each analytic component on the grid.
DriverPath make_driver(const std::vector<double>& times, const std::vector<std::function<double(double)>>& components);

/// Fractional Brownian motion on a fixed grid; the Cholesky factor is computed once.
class FbmSampler {
 public:
  FbmSampler(double hurst, std::vector<double> times);
  /// One path (value 0 at time 0 if the grid starts at 0), deterministic per seed.
  std::vector<double> sample(std::uint64_t seed) const;
  double hurst() const { return hurst_; }

 private:
  double hurst_;
  std::vector<double> times_;
  std::vector<int> active_;
  Eigen::MatrixXd lower_;
};

std::vector<double> sample_fbm(double hurst, const std::vector<double>& times, std::uint64_t seed);

/// max over grid pairs of |x_t - x_s| / |t - s|^alpha.
double holder_estimate(std::span<const double> times, std::span<const double> values, double alpha);
/// Maximum of the single-component estimate over the non-time components (time only when d = 0).
double holder_estimate(const DriverPath& q, double alpha);

std::string format_double(double x);
std::uint64_t fnv1a(std::string_view text);

}  // namespace vbrp
