#include "vbrp/driver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "vbrp/error.hpp"

namespace vbrp {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

DriverPath::DriverPath(std::vector<double> times, std::vector<std::vector<double>> components)
    : times_(std::move(times)) {
  if (times_.size() < 2) throw PreconditionError("driver: at least two grid points are required");
  for (std::size_t j = 1; j < times_.size(); ++j)
    if (!(times_[j] > times_[j - 1])) throw PreconditionError("driver: grid must be strictly increasing");
  values_.push_back(times_);
  for (auto& c : components) {
    if (c.size() != times_.size()) throw PreconditionError("driver: component length differs from grid");
    values_.push_back(std::move(c));
  }
}

double DriverPath::operator()(double t, int i) const {
  int l = cell_of(t);
  double w = (t - times_[l]) / (times_[l + 1] - times_[l]);
  return values_[i][l] + w * (values_[i][l + 1] - values_[i][l]);
}

int DriverPath::cell_of(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  int l = static_cast<int>(it - times_.begin()) - 1;
  return std::clamp(l, 0, cells() - 1);
}

int DriverPath::index_of(double t, double tol) const {
  const double scale = tol * std::max(1.0, std::abs(horizon()));
  auto it = std::lower_bound(times_.begin(), times_.end(), t - scale);
  if (it != times_.end() && std::abs(*it - t) <= scale) return static_cast<int>(it - times_.begin());
  return -1;
}

bool DriverPath::is_kink(double t, double tol) const {
  int j = index_of(t, tol);
  return j > 0 && j < cells();
}

DriverPath DriverPath::refined(int levels) const {
  if (levels < 0) throw PreconditionError("driver: refinement level must be >= 0");
  if (levels > 24) throw ResourceError("driver: refinement cap exceeded");
  const int m = 1 << levels;
  std::vector<double> t;
  t.reserve(cells() * m + 1);
  std::vector<std::vector<double>> comps(dim());
  for (auto& c : comps) c.reserve(cells() * m + 1);
  for (int l = 0; l < cells(); ++l) {
    for (int k = 0; k < m; ++k) {
      double w = static_cast<double>(k) / m;
      t.push_back(times_[l] + w * (times_[l + 1] - times_[l]));
      for (int i = 1; i <= dim(); ++i) comps[i - 1].push_back(values_[i][l] + w * (values_[i][l + 1] - values_[i][l]));
    }
  }
  t.push_back(times_.back());
  for (int i = 1; i <= dim(); ++i) comps[i - 1].push_back(values_[i].back());
  return DriverPath(std::move(t), std::move(comps));
}

DriverPath DriverPath::scaled(double lambda) const {
  std::vector<std::vector<double>> comps(values_.begin() + 1, values_.end());
  for (auto& c : comps)
    for (auto& v : c) v *= lambda;
  return DriverPath(times_, std::move(comps));
}

std::string DriverPath::to_csv() const {
  std::ostringstream os;
  os << 't';
  for (int i = 0; i <= dim(); ++i) os << ",q" << i;
  os << '\n';
  for (std::size_t j = 0; j < times_.size(); ++j) {
    os << format_double(times_[j]);
    for (int i = 0; i <= dim(); ++i) os << ',' << format_double(values_[i][j]);
    os << '\n';
  }
  return os.str();
}

DriverPath DriverPath::from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("driver csv: empty input");
  const auto ncols = std::count(line.begin(), line.end(), ',') + 1;
  if (ncols < 2) throw ValidationError("driver csv: expected columns t,q0,...");
  std::vector<double> t;
  std::vector<std::vector<double>> comps(ncols - 2);
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> cells;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      auto next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      double v = 0;
      const char* first = line.data() + pos;
      auto res = std::from_chars(first, line.data() + next, v);
      if (res.ec != std::errc() || res.ptr != line.data() + next)
        throw ValidationError("driver csv: bad number on line " + std::to_string(row));
      cells.push_back(v);
      pos = next + 1;
    }
    if (static_cast<long>(cells.size()) != ncols)
      throw ValidationError("driver csv: wrong column count on line " + std::to_string(row));
    if (cells[0] != cells[1]) throw ValidationError("driver csv: q0 must equal t on line " + std::to_string(row));
    t.push_back(cells[0]);
    for (long i = 2; i < ncols; ++i) comps[i - 2].push_back(cells[i]);
  }
  try {
    return DriverPath(std::move(t), std::move(comps));
  } catch (const PreconditionError& e) {
    throw ValidationError(std::string("driver csv: ") + e.what());
  }
}

void DriverPath::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << to_csv();
}

DriverPath DriverPath::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_csv(ss.str());
}

std::uint64_t DriverPath::hash() const { return fnv1a(to_csv()); }

std::vector<double> uniform_grid(double horizon, int cells) {
  if (cells < 1 || !(horizon > 0)) throw PreconditionError("uniform_grid: need cells >= 1 and horizon > 0");
  std::vector<double> t(cells + 1);
  for (int j = 0; j <= cells; ++j) t[j] = horizon * j / cells;
  t.back() = horizon;
  return t;
}

DriverPath make_driver(const std::vector<double>& times, const std::vector<std::function<double(double)>>& components) {
  std::vector<std::vector<double>> comps;
  for (const auto& f : components) {
    std::vector<double> c(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) c[j] = f(times[j]);
    comps.push_back(std::move(c));
  }
  return DriverPath(times, std::move(comps));
}

FbmSampler::FbmSampler(double hurst, std::vector<double> times) : hurst_(hurst), times_(std::move(times)) {
  if (!(hurst > 0 && hurst < 1)) throw PreconditionError("fbm: Hurst index must lie in (0,1)");
  for (std::size_t j = 1; j < times_.size(); ++j)
    if (!(times_[j] > times_[j - 1])) throw PreconditionError("fbm: grid must be strictly increasing");
  for (std::size_t j = 0; j < times_.size(); ++j)
    if (times_[j] != 0) active_.push_back(static_cast<int>(j));
  const auto n = static_cast<Eigen::Index>(active_.size());
  Eigen::MatrixXd cov(n, n);
  const double two_h = 2 * hurst;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      double s = times_[active_[a]], t = times_[active_[b]];
      cov(a, b) = cov(b, a) =
          0.5 * (std::pow(std::abs(s), two_h) + std::pow(std::abs(t), two_h) - std::pow(std::abs(t - s), two_h));
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw DiagnosticError("fbm: covariance matrix is not numerically positive definite");
  lower_ = llt.matrixL();
}

std::vector<double> FbmSampler::sample(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(lower_.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  Eigen::VectorXd x = lower_.triangularView<Eigen::Lower>() * z;
  std::vector<double> out(times_.size(), 0.0);
  for (std::size_t a = 0; a < active_.size(); ++a) out[active_[a]] = x[static_cast<Eigen::Index>(a)];
  return out;
}

std::vector<double> sample_fbm(double hurst, const std::vector<double>& times, std::uint64_t seed) {
  return FbmSampler(hurst, times).sample(seed);
}

double holder_estimate(std::span<const double> times, std::span<const double> values, double alpha) {
  if (!(alpha > 0 && alpha <= 1)) throw PreconditionError("holder_estimate: alpha must lie in (0,1]");
  if (times.size() != values.size()) throw PreconditionError("holder_estimate: size mismatch");
  double best = 0;
  for (std::size_t a = 0; a < times.size(); ++a)
    for (std::size_t b = a + 1; b < times.size(); ++b)
      best = std::max(best, std::abs(values[b] - values[a]) / std::pow(times[b] - times[a], alpha));
  return best;
}

double holder_estimate(const DriverPath& q, double alpha) {
  if (q.dim() == 0) return holder_estimate(q.times(), q.component(0), alpha);
  double best = 0;
  for (int i = 1; i <= q.dim(); ++i) best = std::max(best, holder_estimate(q.times(), q.component(i), alpha));
  return best;
}

}  // namespace vbrp
