#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vbrp/driver.hpp"
#include "vbrp/kernel.hpp"
#include "vbrp/vector_field.hpp"

namespace vbrp {

struct KernelSpec {
  /// fractional, exponential or one.
  std::string name = "fractional";
  /// Rate of the exponential kernel.
  double lambda = 1.0;
};

struct DriverSpec {
  /// sine, polynomial, constant or fbm.
  std::string kind = "sine";
  int cells = 256;
  double horizon = 1.0;
  double amplitude = 1.0;
  double frequency = 1.0;
  double hurst = 0.5;
  std::uint64_t seed = 1;
};

/// Declarative experiment description read from an INI-style key-value file.
struct ExperimentConfig {
  std::string command;
  KernelSpec kernel;
  DriverSpec driver;

  /// Regularity exponents of the lift; the fractional kernel uses `gamma` as its singularity.
  double alpha = 1.0;
  double gamma = 0.25;
  /// Contraction exponent override; 0 selects the default.
  double beta = 0;
  /// p selects ⌊1/(α−γ)⌋, n selects ⌊1/α⌋; `truncation` > 0 overrides both.
  std::string truncation_rule = "p";
  int truncation = 0;

  /// Largest tree grade of the lift.
  int grade = 2;
  int refine = 2;
  bool full_tables = true;
  int chen_samples = 4;
  /// Restrict tree studies to trees without time labels.
  bool noise_only = false;

  /// Dyadic driver levels for refinement studies.
  int min_level = 7;
  int max_level = 10;

  double sewing_tolerance = 1e-3;
  int sewing_max_level = 10;
  /// Exponent β declared for the sewing germ of the convergence study.
  double declared_beta = 1.7;
  double solver_tolerance = 1e-10;
  double max_ratio = 0.999;
  int max_halvings = 12;
  int max_iterations = 60;

  /// Tree text for coproduct and integrate.
  std::string tree = "((0)(1))";
  double s = 0.0, t = 0.75, tau = 1.0;
  /// Driver component integrated against and the source component of the controlled path.
  int component = 1;
  int source = 1;
  /// Field applied to the controlled path before integration.
  std::string integrand = "sine";

  double y0 = 0.5;
  /// One field per driver component, time first.
  std::vector<std::string> fields{"sine", "sine"};
  double window = 0;

  std::string output = "out";
  int enumerate_grade = 3;
  int enumerate_labels = 1;
  std::size_t kernel_samples = 2000;

  static ExperimentConfig parse(std::string_view text, std::string_view command = {});
  static ExperimentConfig load(const std::string& path, std::string_view command = {});

  /// Throws ValidationError describing the first violated constraint.
  void validate() const;
  /// Sorted key = value lines of every field except the output directory, the input of hash().
  std::string canonical() const;
  std::uint64_t hash() const;
  int resolved_truncation() const;
};

/// zero, constant:c, sine, sine:amplitude:frequency:phase or poly:a0:a1:...
VectorField parse_field(std::string_view text, int order = 8);

VolterraKernel make_kernel(const ExperimentConfig& cfg);
/// Driver sampled on 2^level cells of [0, horizon], or on `driver.cells` cells when level < 0.
DriverPath make_driver(const ExperimentConfig& cfg, int level = -1);

std::string hex_hash(std::uint64_t h);

}  // namespace vbrp
