// Acceptance suite: one line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "heightlab/experiment.hpp"
#include "heightlab/gibbs.hpp"
#include "heightlab/ising.hpp"
#include "heightlab/rng.hpp"
#include "heightlab/sampler.hpp"
#include "heightlab/verify.hpp"

using namespace heightlab;

namespace {

struct Criterion {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

Region coords_region(const LatticePtr& lattice, const std::vector<Coord>& coords) {
  std::vector<VertexId> ids;
  for (Coord c : coords) ids.push_back(lattice->find(c));
  return Region::make(lattice, std::move(ids));
}

void summarize_suite(Criterion& c, const std::vector<AuditReport>& reports) {
  double worst = 0.0;
  int failures = 0;
  for (const AuditReport& report : reports) {
    if (!report.pass) ++failures;
    worst = std::min(worst, report.margin);
  }
  c.require(failures == 0, std::to_string(failures) + " failing audits");
  c.detail += (c.detail.empty() ? "" : "; ") + std::to_string(reports.size()) +
              " audits, worst margin " + fmt(worst);
}

// 1. Decomposition identity on all regions up to three sites.
Criterion criterion_decomposition() {
  Criterion c;
  SuiteOptions opts;
  opts.full = true;
  summarize_suite(c, decomposition_suite(opts));
  return c;
}

// 2. FKG lattice condition for |phi|.
Criterion criterion_fkg() {
  Criterion c;
  SuiteOptions opts;
  opts.full = true;
  summarize_suite(c, fkg_suite(opts));
  return c;
}

// 3. GKS inequalities, 50 random draws per region size.
Criterion criterion_gks() {
  Criterion c;
  SuiteOptions opts;
  opts.full = true;
  summarize_suite(c, gks_suite(opts));
  return c;
}

// 4. Bernoulli(1/2) domination of the conditioned-nonnegative measure.
Criterion criterion_bernoulli_domination() {
  Criterion c;
  CounterRng rng(9014, 0);
  int audits = 0;
  for (LatticeKind kind : {LatticeKind::Square, LatticeKind::Hexagonal}) {
    auto lattice = PlanarLattice::build(kind, 4);
    const double beta = std::log(2.0) / lattice->max_degree();
    PotentialSpec sos = PotentialSpec::sos(100);
    std::vector<Region> regions = {
        Region::make(lattice, {lattice->root()}),
        Region::make(lattice, {lattice->root(), lattice->neighbours(lattice->root())[0]}),
    };
    for (const Region& region : regions) {
      for (int draw = 0; draw < 100; ++draw) {
        std::vector<int> bc(lattice->size(), 0);
        if (draw > 0)
          for (VertexId v : region.boundary()) bc[v] = static_cast<int>(rng.next_below(3));
        BernoulliDominationResult result =
            bernoulli_domination_check(region, bc, sos, beta, 40);
        ++audits;
        c.require(result.report.pass, "domination failed: " + result.report.instance);
        if (draw == 0 && region.interior_size() == 1)
          c.require(std::abs(result.report.margin) <= 1e-10,
                    "equality-case margin is " + fmt(result.report.margin));
      }
    }
  }
  c.detail += (c.detail.empty() ? "" : "; ") + std::to_string(audits) +
              " audits incl. margin-0 equality cases";
  return c;
}

// 5. Two-copy domination of 2X conditioned on zeta = 0.
Criterion criterion_two_copy_domination() {
  Criterion c;
  CounterRng rng(9015, 0);
  double worst_p = 1.0;
  for (LatticeKind kind : {LatticeKind::Square, LatticeKind::Hexagonal}) {
    auto lattice = PlanarLattice::build(kind, 4);
    const double beta = std::log(2.0) / (2.0 * lattice->max_degree());
    PotentialSpec sos = PotentialSpec::sos(200);
    Region site = Region::make(lattice, {lattice->root()});
    std::vector<int> cond = {0};
    for (int draw = 0; draw < 50; ++draw) {
      std::vector<int> bc_a(lattice->size(), 0), bc_b(lattice->size(), 0);
      if (draw > 0) {
        for (VertexId v : site.boundary()) {
          bc_a[v] = static_cast<int>(rng.next_below(3));
          bc_b[v] = static_cast<int>(rng.next_below(3));
        }
      }
      // the check also validates the zeta case table on every configuration
      TwoCopyDominationResult result =
          two_copy_domination_check(site, bc_a, bc_b, sos, beta, 100, cond);
      c.require(result.report.pass, "domination failed: " + result.report.instance);
      c.require(result.p_psi_ge2 >= 0.5 - 1e-10,
                "P(psi>=2|zeta=0) = " + fmt(result.p_psi_ge2));
      worst_p = std::min(worst_p, result.p_psi_ge2);
    }
  }
  c.detail += (c.detail.empty() ? "" : "; ") +
              ("100 audits, min P(psi>=2|zeta=0) = " + fmt(worst_p));
  return c;
}

// 6. Chains reach the exact root marginal in total variation, deterministically.
Criterion criterion_sampler() {
  Criterion c;
  auto lattice = PlanarLattice::build(LatticeKind::Square, 3);
  Region region = coords_region(lattice, {{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  std::vector<int> zero(lattice->size(), 0);
  PotentialSpec sos = PotentialSpec::sos();
  const double beta = 1.0;
  const int m = 2;

  ExactTable table = enumerate_measure(region, zero, sos, beta, m);
  SiteMarginal exact = site_marginal(table, lattice->root());

  auto run_tv = [&](int cluster_every, std::uint64_t seed) {
    ChainState state = make_chain(region, zero, m, seed, 0);
    HeatBathKernel kernel(region, sos, beta, m);
    std::vector<double> histogram(2 * m + 1, 0.0);
    const long sweeps = 100000;
    for (long sweep = 0; sweep < sweeps; ++sweep) {
      kernel.sweep(state);
      if (cluster_every > 0 && (sweep + 1) % cluster_every == 0)
        sign_cluster_move(state, sos, beta);
      histogram[state.config.h[lattice->root()] + m] += 1.0 / sweeps;
    }
    double tv = 0.0;
    for (int k = 0; k < 2 * m + 1; ++k) tv += std::abs(histogram[k] - exact.p[k]);
    return 0.5 * tv;
  };

  double tv_heat_bath = run_tv(0, 4242);
  double tv_hybrid = run_tv(1, 4242);
  c.require(tv_heat_bath < 0.02, "heat-bath TV = " + fmt(tv_heat_bath));
  c.require(tv_hybrid < 0.02, "hybrid TV = " + fmt(tv_hybrid));
  c.require(run_tv(0, 4242) == tv_heat_bath, "trajectories not seed-deterministic");
  c.detail += (c.detail.empty() ? "" : "; ") + ("TV heat-bath " + fmt(tv_heat_bath) +
              ", hybrid " + fmt(tv_hybrid) + " at 1e5 sweeps");
  return c;
}

// 7. Volume monotonicity of the root second moment along nested regions.
Criterion criterion_volume() {
  Criterion c;
  auto lattice = PlanarLattice::build(LatticeKind::Square, 4);
  std::vector<Region> chain = {
      coords_region(lattice, {{0, 0}}),
      coords_region(lattice, {{0, 0}, {1, 0}}),
      coords_region(lattice, {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}}),
  };
  int audits = 0;
  double worst = 0.0;
  for (const PotentialSpec& pot :
       {PotentialSpec::sos(), PotentialSpec::discrete_gaussian()}) {
    for (double beta : {0.5, 1.0, 2.0}) {
      AuditReport report = volume_monotonicity_audit(chain, pot, beta, 3);
      ++audits;
      worst = std::min(worst, report.margin);
      c.require(report.pass, "monotonicity failed: " + report.instance);
    }
  }
  c.detail += (c.detail.empty() ? "" : "; ") + std::to_string(audits) +
              " chains of 3 nested regions, worst margin " + fmt(worst);
  return c;
}

// 8. Delocalisation trend: growth at small beta, saturation at large beta.
Criterion criterion_delocalisation() {
  Criterion c;
  const double beta_hot = std::log(2.0) / 4.0;

  auto moment = [&](int n, double beta, int m, long burnin, long per_batch) {
    BuiltLattice built = build_lattice(LatticeKind::Square, n);
    std::vector<int> zero = uniform_heights(*built.lattice, 0);
    McConfig mc;
    mc.seed = 90188;
    mc.stream = static_cast<std::uint64_t>(n) * 131 + static_cast<std::uint64_t>(beta * 97);
    mc.burnin = burnin;
    mc.batches = 32;
    mc.sweeps_per_batch = per_batch;
    ChainStats stats =
        run_chain(built.region, zero, PotentialSpec::sos(128), beta, m, mc);
    return stats;
  };

  ChainStats hot4 = moment(4, beta_hot, 48, 2000, 200);
  ChainStats hot8 = moment(8, beta_hot, 48, 3000, 300);
  ChainStats hot16 = moment(16, beta_hot, 48, 3000, 300);
  for (const ChainStats* stats : {&hot4, &hot8, &hot16})
    c.require(stats->truncation_fraction < 1e-6,
              "truncation mass " + fmt(stats->truncation_fraction));

  auto step = [&](const ChainStats& small, const ChainStats& large) {
    double gap = large.second_moment - small.second_moment;
    double combined = std::sqrt(small.second_moment_stderr * small.second_moment_stderr +
                                large.second_moment_stderr * large.second_moment_stderr);
    return std::pair<double, double>(gap, combined);
  };
  auto [gap48, se48] = step(hot4, hot8);
  auto [gap816, se816] = step(hot8, hot16);
  c.require(gap48 > 3.0 * se48,
            "n=4 -> n=8 grows by " + fmt(gap48) + " vs 3se=" + fmt(3.0 * se48));
  c.require(gap816 > 3.0 * se816,
            "n=8 -> n=16 grows by " + fmt(gap816) + " vs 3se=" + fmt(3.0 * se816));

  ChainStats cold8 = moment(8, 5.0, 4, 500, 100);
  ChainStats cold16 = moment(16, 5.0, 4, 500, 100);
  auto [gap_cold, se_cold] = step(cold8, cold16);
  c.require(std::abs(gap_cold) <= 3.0 * se_cold,
            "beta=5 saturation gap " + fmt(gap_cold) + " vs 3se=" + fmt(3.0 * se_cold));

  c.detail += (c.detail.empty() ? "" : "; ") +
              ("phi_r^2 = " + fmt(hot4.second_moment) + " -> " + fmt(hot8.second_moment) +
               " -> " + fmt(hot16.second_moment) + " at beta=log2/4; " +
               fmt(cold8.second_moment) + " ~ " + fmt(cold16.second_moment) +
               " at beta=5");
  return c;
}

// 9. The two stochastic-dominance oracles agree on randomized instances.
Criterion criterion_oracle_agreement() {
  Criterion c;
  AuditReport report = dominance_oracle_agreement(200, 90199);
  c.require(report.pass, "oracle disagreement");
  c.detail += (c.detail.empty() ? "" : "; ") + ("200 instances, worst gap " +
              fmt(-report.margin));
  return c;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    double budget_seconds;
    Criterion (*run)();
  };
  const std::vector<Entry> entries = {
      {1, "decomposition-identity", 60, criterion_decomposition},
      {2, "fkg-lattice-condition", 300, criterion_fkg},
      {3, "gks-suite", 60, criterion_gks},
      {4, "bernoulli-domination", 120, criterion_bernoulli_domination},
      {5, "two-copy-domination", 120, criterion_two_copy_domination},
      {6, "sampler-correctness", 120, criterion_sampler},
      {7, "volume-monotonicity", 120, criterion_volume},
      {8, "delocalisation-trend", 1800, criterion_delocalisation},
      {9, "dominance-oracle-agreement", 60, criterion_oracle_agreement},
  };

  int failures = 0;
  for (const Entry& entry : entries) {
    auto start = std::chrono::steady_clock::now();
    Criterion result = entry.run();
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > entry.budget_seconds) {
      result.pass = false;
      result.detail += (result.detail.empty() ? "" : "; ") + ("over budget " +
                       fmt(seconds) + "s > " + fmt(entry.budget_seconds) + "s");
    }
    if (!result.pass) ++failures;
    std::printf("ACCEPTANCE %d %s %s (%.1fs) %s\n", entry.id, entry.name,
                result.pass ? "PASS" : "FAIL", seconds, result.detail.c_str());
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("ACCEPTANCE SUMMARY 9/9 PASS\n");
    return 0;
  }
  std::printf("ACCEPTANCE SUMMARY %d/9 FAIL\n", failures);
  return 1;
}
