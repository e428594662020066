#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vbrp/config.hpp"
#include "vbrp/signature.hpp"

namespace vbrp {

/// Files and verdict of one experiment run.
struct RunOutput {
  /// (file name, content) pairs written into the output directory.
  std::vector<std::pair<std::string, std::string>> files;
  /// Short human-readable report printed by the CLI.
  std::string summary;
  /// 0 success, 3 numerical diagnostic failure.
  int status = 0;
  /// Lift whose tables are exported into the `lift` subdirectory.
  std::shared_ptr<const VolterraLift> lift;
};

/// Coproduct expansion of a tree, one cut term per line; a decorated-root tree t is read as B+(t).
std::string coproduct_text(std::string_view tree);

/// Runs the configured command; the config must validate.
RunOutput run_experiment(const ExperimentConfig& cfg);

/// manifest.json content: command, config hash and text, module versions, tolerances and output hashes.
std::string manifest(const ExperimentConfig& cfg, const RunOutput& out);

/// Writes every output file and the manifest into `dir`, creating it if needed.
void write_run(const ExperimentConfig& cfg, const RunOutput& out, const std::string& dir);

}  // namespace vbrp
