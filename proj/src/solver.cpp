#include "vbrp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <sstream>

#include "vbrp/driver.hpp"
#include "vbrp/error.hpp"
#include "vbrp/star.hpp"

namespace vbrp {

double default_beta(double alpha, double gamma, int p) {
  if (p <= 1) return alpha;
  return std::min(alpha, std::max(gamma + 1.0 / (p - 1), alpha - (alpha - gamma) / 4));
}

namespace {

int resolve_truncation(const VolterraLift& lift, const SolveConfig& cfg) {
  const int p = cfg.truncation > 0 ? cfg.truncation : truncation_level(lift.config().alpha, lift.config().gamma);
  if (p < 1) throw PreconditionError("truncation level must be at least 1");
  return p;
}

std::vector<int> spread(int cells, int samples) {
  const int k = std::max(2, std::min(samples, cells + 1));
  std::vector<int> out;
  for (int j = 0; j < k; ++j) {
    const int p = static_cast<int>(std::lround(static_cast<double>(j) * cells / (k - 1)));
    if (out.empty() || out.back() != p) out.push_back(p);
  }
  return out;
}

}  // namespace

PicardMap::PicardMap(const VolterraLift& lift, std::vector<VectorField> fields, int first, int last,
                     std::vector<double> history, const SolveConfig& cfg)
    : lift_(&lift),
      fields_(std::move(fields)),
      first_(first),
      last_(last),
      history_(std::move(history)),
      cfg_(cfg),
      p_(resolve_truncation(lift, cfg)),
      chain_(enumerate_trees(p_ - 1, lift.driver().dim())) {
  const int cells = lift.cells();
  const int d = lift.driver().dim();
  if (static_cast<int>(fields_.size()) != d + 1) throw PreconditionError("one vector field per driver component is required");
  if (!(0 <= first && first < last && last <= cells)) throw PreconditionError("windows need 0 <= first < last <= cells");
  stride_ = cells - first + 1;
  if (static_cast<int>(history_.size()) != stride_) throw PreconditionError("history needs one value per upper time");
  for (const auto& f : fields_)
    if (f.order() < p_ + 1) throw PreconditionError("vector field " + f.name() + " needs " + std::to_string(p_ + 1) + " derivatives");
  const double alpha = lift.config().alpha, gamma = lift.config().gamma;
  beta_ = cfg.beta > 0 ? cfg.beta : default_beta(alpha, gamma, p_);
  if (!(beta_ > gamma && beta_ <= alpha)) throw PreconditionError("beta must lie in (gamma, alpha]");
  if (p_ > 1 && beta_ - gamma < 1.0 / (p_ - 1) - 1e-12 && cfg.beta > 0)
    throw PreconditionError("beta - gamma must be at least 1/(p-1)");

  const auto& trees = chain_.trees();
  std::map<std::string, int> index;
  for (std::size_t k = 0; k < trees.size(); ++k) index[trees[k].key()] = static_cast<int>(k);
  const int window = last - first;
  for (Label i = 0; i <= d; ++i)
    for (std::size_t k = 0; k < trees.size(); ++k) {
      const DecoratedTree g = graft(i, trees[k]);
      if (!lift.has(g)) throw PreconditionError("grafted component " + to_string(g) + " is missing from the lift");
      Grafted entry{i, static_cast<int>(k), -1, {}};
      if (auto it = index.find(g.key()); it != index.end()) entry.target = it->second;
      entry.cells.assign(static_cast<std::size_t>(window) * stride_, 0.0);
      for (int l = first; l < last; ++l)
        for (int c = l + 1; c <= cells; ++c)
          entry.cells[static_cast<std::size_t>(l - first) * stride_ + (c - first)] = lift.cell(g, l, c);
      grafted_.push_back(std::move(entry));
    }

  if (p_ == 1 && cfg.trapezoid) {
    const int refine = lift.config().refine;
    const DriverPath fine = lift.driver().refined(refine);
    const int parts = 1 << refine;
    const auto& k = lift.kernel();
    moments_.assign(d + 1, std::vector<double>(static_cast<std::size_t>(window) * stride_, 0.0));
    for (int l = first; l < last; ++l) {
      const double tl = lift.grid()[l];
      for (int c = l + 1; c <= cells; ++c) {
        const double tau = lift.grid()[c];
        for (int sub = l * parts; sub < (l + 1) * parts; ++sub) {
          const double a = fine.time(sub), b = fine.time(sub + 1);
          const double shape = k.moment(tau, a, b) + (a - tl) * k.integral(tau, a, b);
          for (Label i = 0; i <= d; ++i)
            moments_[i][static_cast<std::size_t>(l - first) * stride_ + (c - first)] += fine.slope(sub, i) * shape;
        }
      }
    }
  }
  samples_ = spread(window, cfg.norm_samples);
}

std::size_t PicardMap::pair(int j, int c) const { return static_cast<std::size_t>(j) * samples_.size() + c; }

PicardMap::State PicardMap::initial() const {
  std::vector<double> diagonal(history_.begin(), history_.begin() + (last_ - first_ + 1));
  return from_diagonal(diagonal);
}

PicardMap::State PicardMap::from_diagonal(const std::vector<double>& diagonal) const {
  const int window = last_ - first_;
  if (static_cast<int>(diagonal.size()) != window + 1) throw PreconditionError("one diagonal value per window point");
  State s;
  s.values.assign(window + 1, std::vector<double>(chain_.trees().size(), 0.0));
  for (int j = 0; j <= window; ++j) s.values[j][0] = diagonal[j];
  const int k = static_cast<int>(samples_.size());
  s.path.assign(static_cast<std::size_t>(k) * k, 0.0);
  for (int j = 0; j < k; ++j)
    for (int c = j; c < k; ++c)
      s.path[pair(j, c)] = history_[samples_[c]] + diagonal[samples_[j]] - history_[samples_[j]];
  return s;
}

std::vector<std::vector<double>> PicardMap::field_values(const State& y) const {
  const std::size_t n = chain_.trees().size();
  std::vector<std::vector<double>> out(y.values.size(), std::vector<double>(n * fields_.size(), 0.0));
  for (std::size_t j = 0; j < y.values.size(); ++j)
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      if (fields_[i].is_zero()) continue;
      const auto v = chain_.apply(fields_[i], y.values[j]);
      std::copy(v.begin(), v.end(), out[j].begin() + static_cast<std::ptrdiff_t>(i * n));
    }
  return out;
}

double PicardMap::germ(const std::vector<std::vector<double>>& fv, int l, int c) const {
  const std::size_t n = chain_.trees().size();
  const std::size_t slot = static_cast<std::size_t>(l) * stride_ + (c - first_);
  double acc = 0;
  for (const auto& g : grafted_) acc += g.cells[slot] * fv[l][g.label * n + g.source];
  if (!moments_.empty()) {
    const double width = lift_->grid()[first_ + l + 1] - lift_->grid()[first_ + l];
    for (std::size_t i = 0; i < fields_.size(); ++i)
      acc += (fv[l + 1][i * n] - fv[l][i * n]) / width * moments_[i][slot];
  }
  return acc;
}

PicardMap::State PicardMap::apply(const State& y) const {
  const int window = last_ - first_;
  if (static_cast<int>(y.values.size()) != window + 1) throw PreconditionError("state does not match the window");
  const auto fv = field_values(y);
  const std::size_t n = chain_.trees().size();
  State out;
  out.values.assign(window + 1, std::vector<double>(n, 0.0));
  for (int j = 0; j <= window; ++j) {
    double acc = history_[j];
    for (int l = 0; l < j; ++l) acc += germ(fv, l, first_ + j);
    out.values[j][0] = acc;
    for (const auto& g : grafted_)
      if (g.target >= 0) out.values[j][g.target] = fv[j][g.label * n + g.source];
  }
  const int k = static_cast<int>(samples_.size());
  out.path.assign(static_cast<std::size_t>(k) * k, 0.0);
  for (int c = 0; c < k; ++c) {
    double acc = history_[samples_[c]];
    int l = 0;
    for (int j = 0; j <= c; ++j) {
      for (; l < samples_[j]; ++l) acc += germ(fv, l, first_ + samples_[c]);
      out.path[pair(j, c)] = acc;
    }
  }
  return out;
}

double PicardMap::distance(const State& a, const State& b) const {
  const int k = static_cast<int>(samples_.size());
  const std::size_t n = chain_.trees().size();
  const auto& grid = lift_->grid();
  std::vector<double> times;
  std::map<double, int> position;
  for (int j = 0; j < k; ++j) {
    times.push_back(grid[first_ + samples_[j]]);
    position[times.back()] = j;
  }
  auto diff_path = [&](int j, int c) { return a.path[pair(j, c)] - b.path[pair(j, c)]; };
  auto diff_value = [&](int j, std::size_t tree) { return a.values[samples_[j]][tree] - b.values[samples_[j]][tree]; };

  double total = 0;
  for (std::size_t h = 0; h < n; ++h) total += std::abs(a.values[0][h] - b.values[0][h]);
  const double gamma = lift_->config().gamma;
  total += empirical_increment_norm(
      [&](double s, double t, double tau) {
        const int c = position[tau];
        return diff_path(position[t], c) - diff_path(position[s], c);
      },
      times, beta_, gamma);
  for (std::size_t h = 1; h < n; ++h) {
    double best = 0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        best = std::max(best, std::abs(diff_value(j, h) - diff_value(i, h)) / std::pow(times[j] - times[i], beta_));
    total += best;
  }

  // root remainder R^τ_{ts} = y^τ_{ts} − Σ_ρ z^{ρ,τ}_{ts} y^ρ_s
  const auto& trees = chain_.trees();
  std::vector<std::size_t> terms;
  for (std::size_t h = 1; h < n; ++h)
    if (lift_->full_tables() || (trees[h].is_planted() && trees[h].grade() == 1)) terms.push_back(h);
  auto z = [&](std::size_t h, int s, int t, int c) {
    if (lift_->full_tables()) return lift_->value(trees[h], s, t, c);
    double acc = 0;
    for (int l = s; l < t; ++l) acc += lift_->cell(trees[h], l, c);
    return acc;
  };
  total += empirical_increment_norm(
      [&](double s, double t, double tau) {
        const int js = position[s], jt = position[t], c = position[tau];
        double r = diff_path(jt, c) - diff_path(js, c);
        for (std::size_t h : terms)
          r -= z(h, first_ + samples_[js], first_ + samples_[jt], first_ + samples_[c]) * diff_value(js, h);
        return r;
      },
      times, p_ * beta_, p_ * gamma);
  return total;
}

std::vector<std::vector<double>> PicardMap::extend(const State& input) const {
  const int window = last_ - first_;
  const auto fv = field_values(input);
  std::vector<std::vector<double>> rows(window + 1, std::vector<double>(stride_, 0.0));
  for (int c = 0; c < stride_; ++c) {
    double acc = history_[c];
    const int top = std::min(window, c);
    for (int j = 0; j <= top; ++j) {
      if (j > 0) acc += germ(fv, j - 1, first_ + c);
      rows[j][c] = acc;
    }
  }
  return rows;
}

std::optional<SewingResult> PicardMap::sew(const State& input) const {
  const auto& trees = chain_.trees();
  const bool full = lift_->full_tables();
  for (const auto& g : grafted_)
    if (!full && !trees[g.source].is_unit()) return std::nullopt;
  const auto fv = field_values(input);
  const std::size_t n = trees.size();
  const auto& grid = lift_->grid();
  const int window = last_ - first_;
  const int c = last_;
  auto cell = [&](const Grafted& g, int l) { return g.cells[static_cast<std::size_t>(l) * stride_ + (c - first_)]; };
  std::vector<double> sums;
  for (int level = 0; level <= finest_level(window); ++level) {
    const auto points = coarsening(0, window, level);
    double acc = 0;
    for (std::size_t q = 0; q + 1 < points.size(); ++q) {
      const int u = points[q], v = points[q + 1];
      for (const auto& g : grafted_) {
        double value = 0;
        if (full) {
          value = lift_->value(graft(g.label, trees[g.source]), first_ + u, first_ + v, c);
        } else {
          for (int l = u; l < v; ++l) value += cell(g, l);
        }
        acc += value * fv[u][g.label * n + g.source];
      }
      if (!moments_.empty()) {
        const double width = grid[first_ + v] - grid[first_ + u];
        for (const auto& g : grafted_) {
          if (!trees[g.source].is_unit()) continue;
          double moment = 0;
          for (int l = u; l < v; ++l)
            moment += moments_[g.label][static_cast<std::size_t>(l) * stride_ + (c - first_)] +
                      (grid[first_ + l] - grid[first_ + u]) * cell(g, l);
          acc += (fv[v][g.label * n] - fv[u][g.label * n]) / width * moment;
        }
      }
    }
    sums.push_back(acc);
  }
  SewingOptions opt = cfg_.sewing;
  opt.min_level = 0;
  return accept_dyadic(sums, 0, opt);
}

WindowSolution solve_window(const PicardMap& map, const SolveConfig& cfg, const std::optional<PicardMap::State>& guess) {
  WindowSolution out;
  WindowReport& rep = out.report;
  rep.first = map.first();
  rep.last = map.last();
  PicardMap::State y = guess ? *guess : map.initial();
  int bad = 0, counted = 0;
  double log_sum = 0;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    PicardMap::State next = map.apply(y);
    const double d = map.distance(next, y);
    rep.iterations = it;
    if (!std::isfinite(d)) throw DiagnosticError("Picard iterates diverged on window [" + std::to_string(rep.first) + ", " + std::to_string(rep.last) + "]");
    if (!rep.distances.empty()) {
      const double prev = rep.distances.back();
      const double ratio = prev > 0 ? d / prev : 0;
      rep.ratios.push_back(ratio);
      if (prev > 10 * cfg.tolerance) {
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        if (ratio > 0) {
          log_sum += std::log(ratio);
          ++counted;
        }
        bad = ratio >= cfg.max_ratio ? bad + 1 : 0;
        if (bad >= cfg.patience)
          throw DiagnosticError("Picard map does not contract on window [" + std::to_string(rep.first) + ", " +
                                std::to_string(rep.last) + "]: ratio " + format_double(ratio));
      }
    }
    rep.distances.push_back(d);
    y = std::move(next);
    if (d <= cfg.tolerance) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged)
    throw DiagnosticError("Picard iteration cap reached on window [" + std::to_string(rep.first) + ", " +
                          std::to_string(rep.last) + "]");
  if (counted > 0) rep.mean_ratio = std::exp(log_sum / counted);
  rep.residual = map.distance(map.apply(y), y);
  if (cfg.sewing_diagnostic) rep.sewing = map.sew(y);
  rep.message = "converged";
  out.state = std::move(y);
  return out;
}

double Solution::value(int t, int tau) const {
  const int m = static_cast<int>(times.size());
  if (!(0 <= t && t <= tau && tau < m)) throw PreconditionError("solution values need t <= tau on the grid");
  return table[static_cast<std::size_t>(t) * m + tau];
}

std::string Solution::to_csv() const {
  std::ostringstream out;
  out << "t,y\n";
  for (std::size_t j = 0; j < times.size(); ++j) out << format_double(times[j]) << ',' << format_double(path[j]) << '\n';
  return out.str();
}

std::string Solution::report_json() const {
  nlohmann::ordered_json j;
  j["window_length"] = window_length;
  j["halvings"] = halvings;
  j["truncation"] = truncation;
  j["beta"] = beta;
  j["windows"] = nlohmann::ordered_json::array();
  for (const auto& w : windows) {
    nlohmann::ordered_json e;
    e["first"] = w.first;
    e["last"] = w.last;
    e["start"] = w.start;
    e["end"] = w.end;
    e["iterations"] = w.iterations;
    e["converged"] = w.converged;
    e["distances"] = w.distances;
    e["ratios"] = w.ratios;
    e["max_ratio"] = w.max_ratio;
    e["mean_ratio"] = w.mean_ratio;
    e["residual"] = w.residual;
    if (w.sewing) {
      e["sewing_converged"] = w.sewing->converged;
      e["sewing_message"] = w.sewing->message;
      if (std::isfinite(w.sewing->empirical_beta)) e["sewing_empirical_beta"] = w.sewing->empirical_beta;
    }
    j["windows"].push_back(e);
  }
  return j.dump(2) + "\n";
}

Solution solve(double y0, const std::vector<VectorField>& fields, const VolterraLift& lift, const SolveConfig& cfg) {
  const int m = lift.cells();
  if (m > 8192) throw ResourceError("solutions are tabulated for at most 8192 cells");
  const auto& grid = lift.grid();
  const double horizon = grid.back() - grid.front();
  const double start = cfg.window > 0 ? std::min(cfg.window, horizon) : horizon;
  for (int halving = 0;; ++halving) {
    const double length = start / std::ldexp(1.0, halving);
    Solution sol;
    sol.times = grid;
    sol.window_length = length;
    sol.halvings = halving;
    sol.table.assign(static_cast<std::size_t>(m + 1) * (m + 1), 0.0);
    sol.components.assign(m + 1, {});
    std::vector<double> history(m + 1, y0);
    try {
      int a = 0;
      while (a < m) {
        int b = a + 1;
        while (b < m && grid[b] < grid[a] + length - 1e-12 * horizon) ++b;
        PicardMap map(lift, fields, a, b, history, cfg);
        if (a == 0) {
          sol.trees = map.trees();
          sol.truncation = map.truncation();
          sol.beta = map.beta();
        }
        WindowSolution ws = solve_window(map, cfg);
        ws.report.start = grid[a];
        ws.report.end = grid[b];
        const auto rows = map.extend(ws.state);
        const auto image = map.apply(ws.state);
        for (int j = 0; j <= b - a; ++j) {
          for (int c = a + j; c <= m; ++c) sol.table[static_cast<std::size_t>(a + j) * (m + 1) + c] = rows[j][c - a];
          if (j > 0 && !(image.values[j][0] == rows[j][j]))
            throw DiagnosticError("window image and extension disagree on the diagonal");
          if (j == 0 && a > 0 && !(rows[0][0] == sol.path.back()))
            throw DiagnosticError("window boundary values do not match");
          sol.components[a + j] = image.values[j];
          sol.components[a + j][0] = rows[j][j];
        }
        for (int j = a == 0 ? 0 : 1; j <= b - a; ++j) sol.path.push_back(rows[j][j]);
        history.assign(rows[b - a].begin() + (b - a), rows[b - a].end());
        sol.windows.push_back(std::move(ws.report));
        a = b;
      }
      return sol;
    } catch (const DiagnosticError& e) {
      if (halving >= cfg.max_halvings)
        throw DiagnosticError(std::string(e.what()) + " after " + std::to_string(halving) + " window halvings");
    }
  }
}

}  // namespace vbrp
