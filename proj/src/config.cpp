#include "vbrp/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "vbrp/controlled.hpp"
#include "vbrp/error.hpp"
#include "vbrp/trees.hpp"

namespace vbrp {

namespace {

namespace pt = boost::property_tree;

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != ' ' && ch != '\t') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw ValidationError(key + ": not a number: '" + text + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw ValidationError(key + ": not an integer: '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError(key + ": not a boolean: '" + text + "'");
}

/// Binds every configuration key to a member for reading and canonical printing.
struct Binding {
  std::function<void(const std::string&)> read;
  std::function<std::string()> write;
};

std::map<std::string, Binding> bindings(ExperimentConfig& c) {
  std::map<std::string, Binding> b;
  auto real = [&b](const std::string& key, double& v) {
    b[key] = {[&v, key](const std::string& s) { v = to_double(key, s); }, [&v] { return format_double(v); }};
  };
  auto integer = [&b](const std::string& key, int& v) {
    b[key] = {[&v, key](const std::string& s) { v = static_cast<int>(to_integer(key, s)); },
              [&v] { return std::to_string(v); }};
  };
  auto count = [&b](const std::string& key, std::size_t& v) {
    b[key] = {[&v, key](const std::string& s) {
                const auto n = to_integer(key, s);
                if (n < 0) throw ValidationError(key + " must be non-negative");
                v = static_cast<std::size_t>(n);
              },
              [&v] { return std::to_string(v); }};
  };
  auto seed = [&b](const std::string& key, std::uint64_t& v) {
    b[key] = {[&v, key](const std::string& s) {
                const auto n = to_integer(key, s);
                if (n < 0) throw ValidationError(key + " must be non-negative");
                v = static_cast<std::uint64_t>(n);
              },
              [&v] { return std::to_string(v); }};
  };
  auto flag = [&b](const std::string& key, bool& v) {
    b[key] = {[&v, key](const std::string& s) { v = to_bool(key, s); }, [&v] { return std::string(v ? "true" : "false"); }};
  };
  auto text = [&b](const std::string& key, std::string& v) {
    b[key] = {[&v](const std::string& s) { v = s; }, [&v] { return v; }};
  };
  auto list = [&b](const std::string& key, std::vector<std::string>& v) {
    b[key] = {[&v](const std::string& s) { v = split(s, ','); },
              [&v] {
                std::string out;
                for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
                return out;
              }};
  };
  text("run.command", c.command);
  text("run.output", c.output);
  text("kernel.name", c.kernel.name);
  real("kernel.lambda", c.kernel.lambda);
  text("driver.kind", c.driver.kind);
  integer("driver.cells", c.driver.cells);
  real("driver.horizon", c.driver.horizon);
  real("driver.amplitude", c.driver.amplitude);
  real("driver.frequency", c.driver.frequency);
  real("driver.hurst", c.driver.hurst);
  seed("driver.seed", c.driver.seed);
  real("exponents.alpha", c.alpha);
  real("exponents.gamma", c.gamma);
  real("exponents.beta", c.beta);
  text("exponents.truncation_rule", c.truncation_rule);
  integer("exponents.truncation", c.truncation);
  integer("lift.grade", c.grade);
  integer("lift.refine", c.refine);
  flag("lift.full_tables", c.full_tables);
  integer("lift.chen_samples", c.chen_samples);
  flag("lift.noise_only", c.noise_only);
  integer("study.min_level", c.min_level);
  integer("study.max_level", c.max_level);
  real("study.declared_beta", c.declared_beta);
  real("tolerances.sewing", c.sewing_tolerance);
  integer("tolerances.sewing_max_level", c.sewing_max_level);
  real("tolerances.solver", c.solver_tolerance);
  real("tolerances.max_ratio", c.max_ratio);
  integer("tolerances.max_halvings", c.max_halvings);
  integer("tolerances.max_iterations", c.max_iterations);
  text("integrate.tree", c.tree);
  real("integrate.s", c.s);
  real("integrate.t", c.t);
  real("integrate.tau", c.tau);
  integer("integrate.component", c.component);
  integer("integrate.source", c.source);
  text("integrate.integrand", c.integrand);
  real("solve.y0", c.y0);
  list("solve.fields", c.fields);
  real("solve.window", c.window);
  integer("enumerate.grade", c.enumerate_grade);
  integer("enumerate.labels", c.enumerate_labels);
  count("verify.samples", c.kernel_samples);
  return b;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::string_view text, std::string_view command) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("config: " + e.message() + " on line " + std::to_string(e.line()));
  }
  ExperimentConfig cfg;
  auto keys = bindings(cfg);
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty())
      throw ValidationError("config: key '" + section + "' must belong to a section");
    for (const auto& [key, value] : entries) {
      const std::string full = section + "." + key;
      auto it = keys.find(full);
      if (it == keys.end()) throw ValidationError("config: unknown key '" + full + "'");
      it->second.read(value.data());
    }
  }
  if (!command.empty()) {
    if (!cfg.command.empty() && cfg.command != command)
      throw ValidationError("config is for command '" + cfg.command + "', not '" + std::string(command) + "'");
    cfg.command = command;
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path, std::string_view command) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), command);
}

std::string ExperimentConfig::canonical() const {
  ExperimentConfig copy = *this;
  std::string out;
  // the output location does not change any result
  for (const auto& [key, binding] : bindings(copy))
    if (key != "run.output") out += key + " = " + binding.write() + "\n";
  return out;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical()); }

int ExperimentConfig::resolved_truncation() const {
  if (truncation > 0) return truncation;
  return truncation_rule == "n" ? truncation_level_by_alpha(alpha) : truncation_level(alpha, gamma);
}

void ExperimentConfig::validate() const {
  static const std::set<std::string> commands{"coproduct", "enumerate", "lift",  "chen-check",
                                              "convergence", "integrate", "solve", "verify-kernel"};
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
  };
  require(commands.contains(command), "unknown command '" + command + "'");
  require(kernel.name == "fractional" || kernel.name == "exponential" || kernel.name == "one",
          "kernel.name must be fractional, exponential or one");
  require(std::isfinite(kernel.lambda) && kernel.lambda >= 0, "kernel.lambda must be non-negative");
  require(driver.kind == "sine" || driver.kind == "polynomial" || driver.kind == "constant" || driver.kind == "fbm",
          "driver.kind must be sine, polynomial, constant or fbm");
  require(driver.cells >= 1 && driver.cells <= 8192, "driver.cells must lie in [1, 8192]");
  require(driver.horizon > 0, "driver.horizon must be positive");
  require(driver.hurst > 0 && driver.hurst < 1, "driver.hurst must lie in (0, 1)");
  require(alpha > 0 && alpha <= 1, "exponents.alpha must lie in (0, 1]");
  require(gamma >= 0 && gamma < alpha, "exponents.gamma must lie in [0, alpha)");
  const double rho = alpha - gamma;
  require((grade + 1) * rho + gamma > 1, "lift grade too small: (grade + 1)(alpha - gamma) + gamma must exceed 1");
  require(grade >= 1 && grade <= 6, "lift.grade must lie in [1, 6]");
  require(refine >= 0 && refine <= 6, "lift.refine must lie in [0, 6]");
  require(chen_samples >= 0, "lift.chen_samples must be non-negative");
  require(truncation_rule == "p" || truncation_rule == "n", "exponents.truncation_rule must be p or n");
  require(truncation >= 0 && truncation <= grade, "exponents.truncation must lie in [0, lift.grade]");
  require(beta == 0 || (beta > gamma && beta <= alpha), "exponents.beta must be 0 or lie in (gamma, alpha]");
  require(min_level >= 1 && min_level <= max_level && max_level <= 13, "study levels must satisfy 1 <= min <= max <= 13");
  require(declared_beta > 1, "study.declared_beta must exceed 1");
  require(sewing_tolerance > 0 && solver_tolerance > 0, "tolerances must be positive");
  require(sewing_max_level >= 3 && sewing_max_level <= 24, "tolerances.sewing_max_level must lie in [3, 24]");
  require(max_ratio > 0 && max_ratio < 1, "tolerances.max_ratio must lie in (0, 1)");
  require(max_halvings >= 0 && max_iterations >= 1, "iteration limits must be positive");
  require(s >= 0 && s <= t && t <= tau && tau <= driver.horizon, "integrate needs 0 <= s <= t <= tau <= horizon");
  require(component >= 0 && component <= 1 && source >= 0 && source <= 1, "driver components are 0 (time) and 1");
  require(fields.size() == 2, "solve.fields needs one field for time and one for the noise");
  require(enumerate_grade >= 0 && enumerate_grade <= 6 && enumerate_labels >= 0 && enumerate_labels <= 4,
          "enumerate needs grade in [0, 6] and labels in [0, 4]");
  require(kernel_samples >= 1, "verify.samples must be positive");
  require(!output.empty(), "run.output must not be empty");
  if (command == "coproduct") DecoratedTree::parse(tree);
  if (command == "integrate") {
    parse_field(integrand);
    require(full_tables, "integrate needs full lift tables");
    require(resolved_truncation() <= grade, "integrate needs the lift grade to reach the truncation level");
  }
  if (command == "solve")
    for (const auto& f : fields) parse_field(f);
}

VectorField parse_field(std::string_view text, int order) {
  const auto parts = split(text, ':');
  const std::string& kind = parts[0];
  std::vector<double> args;
  for (std::size_t i = 1; i < parts.size(); ++i) args.push_back(to_double("field " + std::string(text), parts[i]));
  if (kind == "zero" && args.empty()) return VectorField::zero();
  if (kind == "constant" && args.size() == 1) return VectorField::constant(args[0]);
  if (kind == "sine" && args.empty()) return VectorField::sine(1, 1, 0, order);
  if (kind == "sine" && args.size() == 3) return VectorField::sine(args[0], args[1], args[2], order);
  if (kind == "poly" && !args.empty()) return VectorField::polynomial(args, order);
  throw ValidationError("unknown vector field '" + std::string(text) + "'");
}

VolterraKernel make_kernel(const ExperimentConfig& cfg) {
  if (cfg.kernel.name == "fractional") return make_fractional_kernel(cfg.gamma);
  if (cfg.kernel.name == "exponential") return make_exponential_kernel(cfg.kernel.lambda);
  if (cfg.kernel.name == "one") return make_exponential_kernel(0.0);
  throw ValidationError("unknown kernel '" + cfg.kernel.name + "'");
}

DriverPath make_driver(const ExperimentConfig& cfg, int level) {
  const auto& d = cfg.driver;
  const int cells = level < 0 ? d.cells : 1 << level;
  const auto grid = uniform_grid(d.horizon, cells);
  if (d.kind == "fbm") {
    // a finer path is subsampled so that every refinement level sees the same realization
    const int fine = level < 0 ? cells : 1 << std::max(level, cfg.max_level);
    const auto path = sample_fbm(d.hurst, uniform_grid(d.horizon, fine), d.seed);
    std::vector<double> values;
    for (int j = 0; j <= cells; ++j) values.push_back(d.amplitude * path[static_cast<std::size_t>(j) * (fine / cells)]);
    return DriverPath(grid, {values});
  }
  const double a = d.amplitude, f = d.frequency;
  std::function<double(double)> q;
  if (d.kind == "sine") q = [a, f](double r) { return a * std::sin(2 * std::numbers::pi * f * r); };
  if (d.kind == "polynomial") q = [a](double r) { return a * (r * r - 0.5 * r); };
  if (d.kind == "constant") q = [a](double) { return a; };
  if (!q) throw ValidationError("unknown driver kind '" + d.kind + "'");
  return make_driver(grid, {q});
}

std::string hex_hash(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace vbrp
