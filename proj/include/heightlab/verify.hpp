#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "heightlab/gibbs.hpp"
#include "heightlab/ising.hpp"
#include "heightlab/lattice.hpp"
#include "heightlab/potential.hpp"

namespace heightlab {

struct AuditReport {
  std::string name;
  std::string instance;  // compact descriptor, enough to replay
  bool pass = false;
  bool informational = false;  // ran outside its hypothesis; never fails a suite
  double margin = 0.0;
  std::string counterexample;  // JSON payload, set on failure
};

// "AUDIT <name> <PASS|FAIL> margin=<float> instance=<descriptor>"
std::string to_line(const AuditReport& report);

// A finite distribution over integer vectors, ordered pointwise.
struct PosetSample {
  std::vector<std::vector<int>> points;
  std::vector<double> prob;
};

struct DominanceResult {
  bool dominated = false;     // mu is stochastically below nu
  double flow_deficit = 0.0;  // 1 - maxflow = worst violation over up-sets
  // min over principal proper up-sets of nu(U) - mu(U); tightness diagnostic.
  double principal_margin = 0.0;
  bool upset_oracle_ran = false;      // brute force runs when <= 20 states
  double proper_upset_margin = 0.0;   // min over proper nonempty up-sets
  // Reported slack: principal_margin when dominated, -flow_deficit otherwise.
  double margin = 0.0;
  std::vector<std::vector<int>> union_points;
  std::vector<std::tuple<int, int, double>> coupling;  // monotone witness
};

// Strassen check via max-flow feasibility, cross-checked against brute-force
// up-set enumeration whenever the union support has <= 20 states. Throws
// std::logic_error if the two oracles disagree.
DominanceResult stochastic_dominance_check(const PosetSample& mu, const PosetSample& nu);

enum class FkgMode { AllPairs, TwoSitePairs };

// FKG lattice condition for the |phi| law of an exact table with nonnegative
// boundary and a symmetric potential.
AuditReport fkg_lattice_audit(const ExactTable& table, FkgMode mode);

// Core inequality scan over an arbitrary profile-weight table (test hook).
AuditReport fkg_lattice_core(int sites, int levels, const std::vector<double>& weight,
                             FkgMode mode, std::string instance);

struct BernoulliDominationResult {
  AuditReport report;
  DominanceResult dominance;
};

// Lemma-style check: the measure conditioned on nonnegative interior heights
// dominates i.i.d. Bernoulli(1/2). Runs outside its hypothesis (beta above
// log(2)/degree) as an informational audit.
BernoulliDominationResult bernoulli_domination_check(const Region& region,
                                                     const std::vector<int>& boundary,
                                                     const PotentialSpec& v, double beta,
                                                     int m);
AuditReport bernoulli_domination_audit(const Region& region, const std::vector<int>& boundary,
                                       const PotentialSpec& v, double beta, int m);

struct TwoCopyDominationResult {
  AuditReport report;
  DominanceResult dominance;
  double p_psi_ge2 = 0.0;  // P(psi >= 2 on every site | zeta = a)
};

// Product-measure check: conditioned on the zeta field, psi = phi' - phi
// dominates 2X with X i.i.d. Bernoulli(1/2). `cond` lists the conditioning
// values of zeta in interior order.
TwoCopyDominationResult two_copy_domination_check(const Region& region,
                                                  const std::vector<int>& boundary_a,
                                                  const std::vector<int>& boundary_b,
                                                  const PotentialSpec& v, double beta, int m,
                                                  std::span<const int> cond);
AuditReport two_copy_domination_audit(const Region& region, const std::vector<int>& boundary_a,
                                      const std::vector<int>& boundary_b,
                                      const PotentialSpec& v, double beta, int m,
                                      std::span<const int> cond);

// Along a nested chain of regions with zero boundary: the |phi| law restricted
// to the smaller region is dominated by the larger region's, and the root
// second moment never decreases. Needs a symmetric |.|-FKG potential.
AuditReport volume_monotonicity_audit(std::span<const Region> chain, const PotentialSpec& v,
                                      double beta, int m);

// GKS inequalities for one ferromagnetic coupling draw: <sigma_A> >= 0,
// <sigma_A sigma_B> >= <sigma_A><sigma_B>, and both exponential forms with
// nonnegative edge fields h and hp.
AuditReport gks_audit(const Region& region, const EdgeCouplings& k, const EdgeCouplings& h,
                      const EdgeCouplings& hp);

// Randomized cross-validation of the two dominance oracles.
AuditReport dominance_oracle_agreement(int trials, std::uint64_t seed);

}  // namespace heightlab
