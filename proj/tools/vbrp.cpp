#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "vbrp/config.hpp"
#include "vbrp/error.hpp"
#include "vbrp/experiments.hpp"
#include "vbrp/parallel.hpp"

namespace {

constexpr int exit_validation = 2;
constexpr int exit_diagnostic = 3;

struct Invocation {
  std::string config;
  std::string output;
  std::string tree;
};

int run(const std::string& command, const Invocation& inv) {
  vbrp::ExperimentConfig cfg;
  try {
    cfg = inv.config.empty() ? vbrp::ExperimentConfig::parse("", command) : vbrp::ExperimentConfig::load(inv.config, command);
    if (!inv.tree.empty()) cfg.tree = inv.tree;
    if (!inv.output.empty()) cfg.output = inv.output;
    cfg.validate();
  } catch (const vbrp::Error& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return exit_validation;
  }
  vbrp::RunOutput out;
  try {
    out = vbrp::run_experiment(cfg);
  } catch (const vbrp::DiagnosticError& e) {
    out.status = exit_diagnostic;
    out.summary = std::string("diagnostic failure: ") + e.what() + "\n";
  } catch (const vbrp::Error& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return exit_validation;
  }
  try {
    vbrp::write_run(cfg, out, cfg.output);
  } catch (const vbrp::Error& e) {
    std::cerr << e.what() << "\n";
    return exit_validation;
  }
  (out.status == 0 ? std::cout : std::cerr) << out.summary;
  return out.status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volterra branched rough path toolkit"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0 uses every core)");

  Invocation inv;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"coproduct", "Plugging coproduct of a tree, one cut term per line"},
      {"enumerate", "Trees up to a grade with symmetry factors"},
      {"lift", "Build and export a Volterra signature lift"},
      {"chen-check", "Chen residuals under driver refinement"},
      {"convergence", "Dyadic sewing rates of a Volterra germ"},
      {"integrate", "Rough Volterra integral of a controlled path"},
      {"solve", "Solve a rough Volterra equation"},
      {"verify-kernel", "Empirical constants of the kernel conditions"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", inv.config, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("outdir", inv.output, "Output directory (overrides run.output)");
    sub->add_option("-o,--output", inv.output, "Output directory (overrides run.output)");
    if (name == "coproduct" || name == "integrate") sub->add_option("--tree", inv.tree, "Tree in parenthesis notation");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_validation;
  }
  vbrp::set_thread_limit(threads);
  return run(app.get_subcommands().front()->get_name(), inv);
}
