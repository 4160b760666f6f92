#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "heightlab/lattice.hpp"
#include "heightlab/verify.hpp"

namespace heightlab {

// Parsed key=value experiment configuration. Defaults match docs/config.md.
struct ExperimentConfig {
  std::string kind;
  LatticeKind lattice = LatticeKind::Square;
  // default sweep matrix: nested balls across the rough and pinned regimes
  std::vector<int> radii = {2, 4, 8, 16};
  std::vector<double> betas = {0.17328679513998632 /* log(2)/4 */, 1.0, 2.0, 5.0};
  std::string potential = "sos";  // sos | dgauss | file:<path>
  int m = 0;                      // truncation window; 0 picks it adaptively
  std::uint64_t seed = 1;
  long sweeps = 20000;  // measured sweeps per chain (split into batches)
  long burnin = 1000;
  int batches = 32;
  int chains = 1;
  std::vector<int> levels = {0};  // contour-stats level sets
  int cluster_every = 1;          // sign cluster move cadence; 0 disables
  std::string size = "small";    // audit kinds: small | full
  std::string output = "heightlab_out.csv";
  int threads = 0;  // 0 = automatic; HEIGHTLAB_THREADS caps either way
};

// Both throw ConfigError naming the offending field.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Runs the experiment and writes the CSV. Returns 0 on success and 2 when an
// audit-suite experiment recorded a non-informational failure.
int run_experiment(const ExperimentConfig& config);

// Convenience wrapper with the CLI exit-code contract: 1 on config errors.
int run_experiment_file(const std::string& path);

struct SuiteOptions {
  bool full = false;
  std::uint64_t seed = 20240501;
};

std::vector<AuditReport> fkg_suite(const SuiteOptions& opts);
std::vector<AuditReport> gks_suite(const SuiteOptions& opts);
std::vector<AuditReport> decomposition_suite(const SuiteOptions& opts);
std::vector<AuditReport> domination_suite(const SuiteOptions& opts);

// Writes the audit CSV plus, when failures exist, a counterexample file next
// to it. Returns 2 when any non-informational audit failed, else 0.
int emit_audit_results(const std::string& output_path,
                       const std::vector<AuditReport>& reports, double wall_seconds);

// Worker count after applying the HEIGHTLAB_THREADS cap.
int effective_threads(int requested);

}  // namespace heightlab
