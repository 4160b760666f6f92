// Command-line front end: experiment runner and audit suites.
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "heightlab/experiment.hpp"
#include "heightlab/verify.hpp"
#include "heightlab/version.hpp"

namespace {

int run_audit_command(const std::string& suite, const std::string& size) {
  heightlab::SuiteOptions opts;
  opts.full = size == "full";
  std::vector<heightlab::AuditReport> reports;
  try {
    if (suite == "fkg" || suite == "all") {
      auto r = heightlab::fkg_suite(opts);
      reports.insert(reports.end(), r.begin(), r.end());
    }
    if (suite == "gks" || suite == "all") {
      auto r = heightlab::gks_suite(opts);
      reports.insert(reports.end(), r.begin(), r.end());
    }
    if (suite == "decomposition" || suite == "all") {
      auto r = heightlab::decomposition_suite(opts);
      reports.insert(reports.end(), r.begin(), r.end());
    }
    if (suite == "domination" || suite == "all") {
      auto r = heightlab::domination_suite(opts);
      reports.insert(reports.end(), r.begin(), r.end());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (reports.empty()) {
    std::cerr << "unknown audit suite '" << suite
              << "' (expected fkg, gks, decomposition, domination or all)\n";
    return 1;
  }
  bool failed = false;
  for (const auto& report : reports) {
    std::cout << heightlab::to_line(report) << "\n";
    if (!report.pass && !report.informational) failed = true;
  }
  return failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"height-function simulation and exact-verification toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "key=value config file")->required();

  std::string suite;
  std::string size = "small";
  CLI::App* audit = app.add_subcommand("audit", "run an audit suite");
  audit->add_option("suite", suite, "fkg | gks | decomposition | domination | all")
      ->required();
  audit->add_option("--size", size, "small (default) or full")
      ->check(CLI::IsMember({"small", "full"}));

  CLI::App* version = app.add_subcommand("version", "print the tool version");

  CLI11_PARSE(app, argc, argv);

  if (version->parsed()) {
    std::cout << "heightlab " << heightlab::kVersion << "\n";
    return 0;
  }
  if (run->parsed()) return heightlab::run_experiment_file(config_path);
  return run_audit_command(suite, size);
}
