#include "vbrp/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>

#include "vbrp/controlled.hpp"
#include "vbrp/coproduct.hpp"
#include "vbrp/error.hpp"
#include "vbrp/sewing.hpp"
#include "vbrp/signature.hpp"
#include "vbrp/solver.hpp"
#include "vbrp/tree_quadrature.hpp"

namespace vbrp {

namespace {

constexpr const char* library_version = "1.0.0";

/// Residuals this far below the compared values count as exact.
constexpr double rounding_floor = 1e-12;

int grid_point(const DriverPath& q, double x, const char* what) {
  const int i = q.index_of(x, 1e-9 * q.horizon());
  if (i < 0) throw ValidationError(std::string("integrate.") + what + " must be a grid point of the driver");
  return i;
}

LiftConfig lift_config(const ExperimentConfig& cfg) {
  LiftConfig lc;
  lc.n = cfg.grade;
  lc.alpha = cfg.alpha;
  lc.gamma = cfg.gamma;
  lc.refine = cfg.refine;
  lc.full_tables = cfg.full_tables;
  lc.chen_samples = cfg.chen_samples;
  return lc;
}

std::vector<DecoratedTree> study_trees(const ExperimentConfig& cfg) {
  std::vector<DecoratedTree> out;
  for (const auto& h : enumerate_trees(cfg.grade, 1))
    if (!h.is_unit() && !(cfg.noise_only && count_label(h, 0) > 0)) out.push_back(h);
  return out;
}

/// q^i_{ts}^m / m! for a ladder carrying a single label, the classical signature of a constant kernel.
std::optional<double> classical_ladder(const DecoratedTree& h, const DriverPath& q, double s, double t) {
  const int m = h.grade();
  for (int v = 1; v < h.size(); ++v)
    if (h.label(v) != h.label(1) || h.parent(v) != v - 1) return std::nullopt;
  double fact = 1;
  for (int k = 2; k <= m; ++k) fact *= k;
  return std::pow(q(t, h.label(1)) - q(s, h.label(1)), m) / fact;
}

RunOutput run_coproduct(const ExperimentConfig& cfg) {
  RunOutput out;
  out.summary = coproduct_text(cfg.tree);
  out.files.emplace_back("coproduct.txt", out.summary);
  return out;
}

RunOutput run_enumerate(const ExperimentConfig& cfg) {
  RunOutput out;
  std::ostringstream csv;
  csv << "tree,grade,symmetry,tree_factorial,planted\n";
  const auto trees = enumerate_trees(cfg.enumerate_grade, cfg.enumerate_labels);
  int mismatches = 0;
  for (const auto& h : trees) {
    if (!(DecoratedTree::parse(to_string(h)) == h)) ++mismatches;
    csv << to_string(h) << ',' << h.grade() << ',' << symmetry_factor(h) << ',' << tree_factorial(h) << ','
        << (h.is_planted() ? 1 : 0) << '\n';
  }
  out.files.emplace_back("trees.csv", csv.str());
  out.summary = std::to_string(trees.size()) + " trees; print/parse round trip " +
                (mismatches == 0 ? "exact" : "FAILED for " + std::to_string(mismatches) + " trees") + "\n";
  out.status = mismatches == 0 ? 0 : 3;
  return out;
}

RunOutput run_lift(const ExperimentConfig& cfg) {
  RunOutput out;
  auto shared = std::make_shared<const VolterraLift>(build_lift(make_kernel(cfg), make_driver(cfg), lift_config(cfg)));
  const VolterraLift& lift = *shared;
  out.lift = shared;
  std::ostringstream csv;
  csv << "tree,grade,sup\n";
  const auto sups = lift.sup_norms();
  for (std::size_t i = 0; i < lift.trees().size(); ++i)
    csv << to_string(lift.trees()[i]) << ',' << lift.trees()[i].grade() << ',' << format_double(sups[i]) << '\n';
  out.files.emplace_back("lift_summary.csv", csv.str());
  std::ostringstream chen;
  chen << "s,u,t,tau,tree,residual,residual_fine\n";
  const auto& report = lift.chen_report();
  for (const auto& c : report.samples)
    chen << format_double(c.s) << ',' << format_double(c.u) << ',' << format_double(c.t) << ',' << format_double(c.tau)
         << ',' << c.tree << ',' << format_double(c.residual) << ',' << format_double(c.residual_fine) << '\n';
  out.files.emplace_back("chen_report.csv", chen.str());
  std::ostringstream summary;
  summary << lift.trees().size() << " trees on " << lift.cells() << " cells; Chen residual "
          << format_double(report.max_residual) << " (tolerance " << format_double(report.tolerance) << ") "
          << (report.conforming ? "conforming" : "NOT conforming") << "\n";
  out.summary = summary.str();
  out.status = report.conforming ? 0 : 3;
  return out;
}

RunOutput run_chen_check(const ExperimentConfig& cfg) {
  RunOutput out;
  const auto k = make_kernel(cfg);
  const auto trees = study_trees(cfg);
  const double horizon = cfg.driver.horizon;
  const double s = 0.1 * horizon, u = 0.45 * horizon, t = 0.8 * horizon, tau = 0.9 * horizon;
  std::vector<std::vector<double>> residuals(trees.size()), lhs(trees.size());
  std::vector<std::vector<std::optional<double>>> classical(trees.size());
  std::vector<int> levels;
  for (int level = cfg.min_level; level <= cfg.max_level; ++level) {
    levels.push_back(level);
    const auto q = make_driver(cfg, level);
    QuadratureOptions opt;
    opt.refine = 0;
    const auto evals = chen_evaluate(trees, k, q, s, u, t, tau, opt);
    for (std::size_t i = 0; i < trees.size(); ++i) {
      residuals[i].push_back(evals[i].residual());
      lhs[i].push_back(evals[i].lhs);
      classical[i].push_back(k.is_constant() && k(1.0, 0.0) == 1.0 ? classical_ladder(trees[i], q, s, t) : std::nullopt);
    }
  }
  std::ostringstream csv;
  csv << "tree,level,cells,residual,order,lhs,classical\n";
  int failing = 0, sequences = 0;
  double order_sum = 0;
  int order_count = 0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    bool exact = true, decreasing = true;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      exact = exact && residuals[i][l] <= rounding_floor * std::max(1.0, std::abs(lhs[i][l]));
      if (l > 0) decreasing = decreasing && residuals[i][l] < residuals[i][l - 1];
    }
    if (!exact) {
      ++sequences;
      if (!decreasing) ++failing;
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
      csv << to_string(trees[i]) << ',' << levels[l] << ',' << (1 << levels[l]) << ',' << format_double(residuals[i][l])
          << ',';
      if (l > 0 && !exact) {
        const double order = std::log2(residuals[i][l - 1] / residuals[i][l]);
        csv << format_double(order);
        order_sum += order;
        ++order_count;
      }
      csv << ',' << format_double(lhs[i][l]) << ',';
      if (classical[i][l]) csv << format_double(*classical[i][l]);
      csv << '\n';
    }
  }
  out.files.emplace_back("chen_check.csv", csv.str());
  std::ostringstream summary;
  summary << trees.size() << " trees, levels " << cfg.min_level << ".." << cfg.max_level << ": " << sequences
          << " nonzero residual sequences, " << failing << " not decreasing";
  if (order_count > 0) summary << ", mean order " << format_double(order_sum / order_count);
  summary << "\n";
  out.summary = summary.str();
  out.status = failing == 0 ? 0 : 3;
  return out;
}

RunOutput run_convergence(const ExperimentConfig& cfg) {
  RunOutput out;
  const auto k = make_kernel(cfg);
  const auto q = make_driver(cfg);
  const double rho = cfg.alpha - cfg.gamma;
  auto xi = AbstractIntegrand::simple([k, q](double a, double b, double tau) { return k(tau, a) * (q(b, 1) - q(a, 1)); },
                                      cfg.alpha, cfg.gamma, cfg.declared_beta, cfg.declared_beta - rho);
  SewingOptions opt;
  opt.max_level = cfg.sewing_max_level;
  opt.tolerance = cfg.sewing_tolerance;
  const auto r = sewing_integrate(xi, cfg.s, cfg.t, cfg.tau, opt);
  const double bound = std::pow(2.0, -(cfg.declared_beta - 1) + 0.1);
  std::ostringstream csv;
  csv << "level,sum,diff,ratio,ratio_bound\n";
  for (const auto& l : r.levels)
    csv << l.level << ',' << format_double(l.sum) << ',' << format_double(l.diff) << ',' << format_double(l.ratio) << ','
        << format_double(bound) << '\n';
  out.files.emplace_back("convergence.csv", csv.str());
  std::ostringstream summary;
  summary << "value " << format_double(r.value) << ", last sum " << format_double(r.last_sum) << ", empirical beta "
          << format_double(r.empirical_beta) << ", " << (r.converged ? "converged" : "NOT converged: " + r.message)
          << "\n";
  out.summary = summary.str();
  out.status = r.converged ? 0 : 3;
  return out;
}

RunOutput run_integrate(const ExperimentConfig& cfg) {
  RunOutput out;
  const auto lift = build_lift(make_kernel(cfg), make_driver(cfg), lift_config(cfg));
  const int p = cfg.resolved_truncation();
  const auto f = parse_field(cfg.integrand, p + 1);
  const auto canonical = ControlledPath::canonical(lift, std::max(p, 2), cfg.source);
  ControlledPath y = compose(f, canonical);
  if (p == 1) {
    ControlledPath young(lift, 1);
    young.set(DecoratedTree(), y.component(DecoratedTree()));
    y = young;
  }
  const auto& q = lift.driver();
  const int s = grid_point(q, cfg.s, "s"), t = grid_point(q, cfg.t, "t"), tau = grid_point(q, cfg.tau, "tau");
  SewingOptions opt;
  opt.tolerance = cfg.sewing_tolerance;
  const auto w = rough_integral(y, cfg.component, s, t, tau, opt);
  out.files.emplace_back("integrate.csv", w.sewing.to_csv());
  std::ostringstream summary;
  summary << "integral of " << f.name() << "(z^" << to_string(planted_dot(cfg.source)) << ") against q^" << cfg.component
          << " over [" << format_double(cfg.s) << ", " << format_double(cfg.t) << "] at tau " << format_double(cfg.tau)
          << ": " << format_double(w.sewing.value) << " (p = " << p << ", "
          << (w.sewing.converged ? "converged" : "NOT converged: " + w.sewing.message) << ")\n";
  out.summary = summary.str();
  out.status = w.sewing.converged ? 0 : 3;
  return out;
}

RunOutput run_solve(const ExperimentConfig& cfg) {
  RunOutput out;
  LiftConfig lc = lift_config(cfg);
  const auto lift = build_lift(make_kernel(cfg), make_driver(cfg), lc);
  const int p = cfg.resolved_truncation();
  std::vector<VectorField> fields;
  for (const auto& text : cfg.fields) fields.push_back(parse_field(text, std::max(8, p + 1)));
  SolveConfig sc;
  sc.window = cfg.window;
  sc.beta = cfg.beta;
  sc.truncation = cfg.truncation > 0 || cfg.truncation_rule == "n" ? p : 0;
  sc.tolerance = cfg.solver_tolerance;
  sc.max_ratio = cfg.max_ratio;
  sc.max_halvings = cfg.max_halvings;
  sc.max_iterations = cfg.max_iterations;
  sc.sewing.tolerance = cfg.sewing_tolerance;
  const auto sol = solve(cfg.y0, fields, lift, sc);

  // drift-only constant field with the fractional kernel: y0 + c t^{1−γ} / (1−γ)
  const auto constant = parse_field(cfg.fields[0]);
  const bool closed_form = cfg.kernel.name == "fractional" && parse_field(cfg.fields[1]).is_zero() &&
                           constant.order() >= 1 && constant.bound_constants(1.0, 3)[1] == 0.0;
  std::ostringstream csv;
  csv << (closed_form ? "t,y,exact,abs_error\n" : "t,y\n");
  double max_error = 0;
  for (std::size_t j = 0; j < sol.path.size(); ++j) {
    csv << format_double(sol.times[j]) << ',' << format_double(sol.path[j]);
    if (closed_form) {
      const double e = 1 - cfg.gamma;
      const double exact = cfg.y0 + constant(0.0) * std::pow(sol.times[j], e) / e;
      const double err = std::abs(sol.path[j] - exact);
      max_error = std::max(max_error, err);
      csv << ',' << format_double(exact) << ',' << format_double(err);
    }
    csv << '\n';
  }
  out.files.emplace_back("solution.csv", csv.str());
  out.files.emplace_back("report.json", sol.report_json());
  std::ostringstream summary;
  double worst = 0;
  for (const auto& w : sol.windows) worst = std::max(worst, w.max_ratio);
  summary << "solved on " << sol.windows.size() << " windows of length " << format_double(sol.window_length) << " ("
          << sol.halvings << " halvings), p = " << sol.truncation << ", beta = " << format_double(sol.beta)
          << ", max contraction ratio " << format_double(worst);
  if (closed_form) summary << ", max abs error vs closed form " << format_double(max_error);
  summary << "\n";
  out.summary = summary.str();
  return out;
}

RunOutput run_verify_kernel(const ExperimentConfig& cfg) {
  RunOutput out;
  const auto k = make_kernel(cfg);
  const auto rep = verify_condition_H(k, cfg.gamma, cfg.kernel_samples, cfg.driver.seed, cfg.driver.horizon);
  std::ostringstream csv;
  csv << "condition,constant\n";
  for (std::size_t i = 0; i < rep.constants.size(); ++i) csv << i + 1 << ',' << format_double(rep.constants[i]) << '\n';
  out.files.emplace_back("kernel_constants.csv", csv.str());
  out.summary = k.name() + " with gamma " + format_double(cfg.gamma) + ": constants " +
                (rep.finite() ? "finite" : "NOT finite") + " over " + std::to_string(rep.samples) + " samples\n";
  out.status = rep.finite() ? 0 : 3;
  return out;
}

}  // namespace

std::string coproduct_text(std::string_view text) {
  DecoratedTree h = DecoratedTree::parse(text);
  if (h.decorated_root()) h = b_plus(Forest({h}));
  std::string out;
  for (const auto& term : coproduct(h)) out += term.to_string() + "\n";
  return out;
}

RunOutput run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.command == "coproduct") return run_coproduct(cfg);
  if (cfg.command == "enumerate") return run_enumerate(cfg);
  if (cfg.command == "lift") return run_lift(cfg);
  if (cfg.command == "chen-check") return run_chen_check(cfg);
  if (cfg.command == "convergence") return run_convergence(cfg);
  if (cfg.command == "integrate") return run_integrate(cfg);
  if (cfg.command == "solve") return run_solve(cfg);
  return run_verify_kernel(cfg);
}

std::string manifest(const ExperimentConfig& cfg, const RunOutput& out) {
  nlohmann::ordered_json j;
  j["command"] = cfg.command;
  j["config_hash"] = hex_hash(cfg.hash());
  j["config"] = nlohmann::ordered_json::array();
  std::istringstream lines(cfg.canonical());
  for (std::string line; std::getline(lines, line);) j["config"].push_back(line);
  j["versions"] = {{"library", library_version},
                   {"hopf_combinatorics", library_version},
                   {"kernels_drivers", library_version},
                   {"volterra_signature", library_version},
                   {"sewing_convolution", library_version},
                   {"controlled_rough", library_version},
                   {"solver", library_version},
                   {"cli_harness", library_version}};
  j["tolerances"] = {{"sewing", cfg.sewing_tolerance},
                     {"sewing_max_level", cfg.sewing_max_level},
                     {"solver", cfg.solver_tolerance},
                     {"max_ratio", cfg.max_ratio},
                     {"max_halvings", cfg.max_halvings},
                     {"rounding_floor", rounding_floor}};
  j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& [name, content] : out.files) j["outputs"].push_back({{"file", name}, {"fnv1a", hex_hash(fnv1a(content))}});
  j["status"] = out.status;
  j["summary"] = out.summary;
  return j.dump(2) + "\n";
}

void write_run(const ExperimentConfig& cfg, const RunOutput& out, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&dir](const std::string& name, const std::string& content) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + (fs::path(dir) / name).string());
    f << content;
  };
  for (const auto& [name, content] : out.files) write(name, content);
  if (out.lift) out.lift->export_csv((fs::path(dir) / "lift").string());
  write("manifest.json", manifest(cfg, out));
}

}  // namespace vbrp
