#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "heightlab/errors.hpp"
#include "heightlab/gibbs.hpp"
#include "heightlab/ising.hpp"
#include "heightlab/kahan.hpp"
#include "heightlab/rng.hpp"
#include "test_support.hpp"

using namespace heightlab;

namespace {

AbsHeightProfile profile_from(const Region& region, const std::map<Coord, int>& values) {
  std::vector<int> xi(region.lattice().size(), 0);
  for (const auto& [coord, value] : values) {
    VertexId v = region.lattice().find(coord);
    REQUIRE(v >= 0);
    xi[v] = value;
  }
  return AbsHeightProfile::make(region, xi);
}

}  // namespace

TEST_CASE("couplings from absolute heights") {
  auto built = build_lattice(LatticeKind::Square, 1);
  Region region = Region::make(built.lattice,
                               {built.lattice->find({0, 0}), built.lattice->find({1, 0})});
  PotentialSpec sos = PotentialSpec::sos();
  PotentialSpec dg = PotentialSpec::discrete_gaussian();

  SUBCASE("zero endpoint kills the coupling") {
    AbsHeightProfile profile = profile_from(region, {{{0, 0}, 0}, {{1, 0}, 3}});
    EdgeCouplings k = couplings_from_abs(profile, sos, 1.7);
    for (std::size_t e = 0; e < region.edges().size(); ++e) {
      const Edge& edge = region.edges()[e];
      if (profile.xi[edge.u] == 0 || profile.xi[edge.v] == 0) CHECK(k.k[e] == 0.0);
    }
  }

  SUBCASE("hand-evaluated values") {
    AbsHeightProfile profile = profile_from(region, {{{0, 0}, 1}, {{1, 0}, 2}});
    EdgeCouplings k_sos = couplings_from_abs(profile, sos, 1.0);
    EdgeCouplings k_dg = couplings_from_abs(profile, dg, 1.0);
    for (std::size_t e = 0; e < region.edges().size(); ++e) {
      const Edge& edge = region.edges()[e];
      int a = profile.xi[edge.u], b = profile.xi[edge.v];
      if (a == 1 && b == 2) {
        CHECK(k_sos.k[e] == doctest::Approx(1.0));  // -(1/2)(|1| - |3|)
      }
      if (a == b && a == 2) CHECK(k_dg.k[e] == doctest::Approx(8.0));  // 2 a^2
    }
    // discrete Gaussian with xi_x = xi_y = a on a dedicated profile
    AbsHeightProfile equal = profile_from(region, {{{0, 0}, 2}, {{1, 0}, 2}});
    EdgeCouplings k_equal = couplings_from_abs(equal, dg, 1.0);
    const auto& edges = region.edges();
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (equal.xi[edges[e].u] == 2 && equal.xi[edges[e].v] == 2)
        CHECK(k_equal.k[e] == doctest::Approx(8.0));
  }

  SUBCASE("beta scales the couplings linearly") {
    AbsHeightProfile profile = profile_from(region, {{{0, 0}, 1}, {{1, 0}, 2}});
    EdgeCouplings k1 = couplings_from_abs(profile, sos, 1.0);
    EdgeCouplings k2 = couplings_from_abs(profile, sos, 2.5);
    for (std::size_t e = 0; e < k1.k.size(); ++e)
      CHECK(k2.k[e] == doctest::Approx(2.5 * k1.k[e]));
  }

  SUBCASE("nonnegative and monotone in the profile, for every convex symmetric V") {
    PotentialSpec quartic = PotentialSpec::from_function(
        "quartic", [](int k) { return std::pow(static_cast<double>(k), 4.0); }, 32);
    for (const PotentialSpec& pot : {sos, dg, quartic}) {
      for (int a = 0; a <= 4; ++a) {
        for (int b = 0; b <= 4; ++b) {
          auto coupling = [&](int xa, int xb) {
            AbsHeightProfile p = profile_from(region, {{{0, 0}, xa}, {{1, 0}, xb}});
            EdgeCouplings k = couplings_from_abs(p, pot, 1.0);
            for (std::size_t e = 0; e < region.edges().size(); ++e) {
              const Edge& edge = region.edges()[e];
              if (p.xi[edge.u] + p.xi[edge.v] == xa + xb && p.xi[edge.u] != 0 &&
                  p.xi[edge.v] != 0 && region.in_interior(edge.u) &&
                  region.in_interior(edge.v))
                return k.k[e];
            }
            return 0.0;
          };
          double base = coupling(a, b);
          CHECK(base >= 0.0);
          if (a < 4) CHECK(coupling(a + 1, b) >= base - 1e-12);
          if (b < 4) CHECK(coupling(a, b + 1) >= base - 1e-12);
        }
      }
    }
  }

  SUBCASE("asymmetric potentials are rejected") {
    PotentialSpec skew = PotentialSpec::from_function(
        "skew", [](int k) { return k * k + 0.25 * k; }, 32);
    AbsHeightProfile profile = profile_from(region, {{{0, 0}, 1}, {{1, 0}, 2}});
    CHECK_THROWS_AS(couplings_from_abs(profile, skew, 1.0), std::invalid_argument);
  }

  SUBCASE("negative profiles are rejected") {
    std::vector<int> xi(built.lattice->size(), 0);
    xi[built.lattice->find({0, 0})] = -1;
    CHECK_THROWS_AS(AbsHeightProfile::make(region, xi), std::invalid_argument);
  }

  SUBCASE("profiles beyond the potential window overflow") {
    PotentialSpec narrow = PotentialSpec::sos(8);
    AbsHeightProfile profile = profile_from(region, {{{0, 0}, 5}, {{1, 0}, 5}});
    CHECK_THROWS_AS(couplings_from_abs(profile, narrow, 1.0), WindowError);
    CHECK_THROWS_AS(log_decomposition_weight(profile, narrow, 1.0), WindowError);
  }
}

TEST_CASE("ising partition function and correlations") {
  auto built = build_lattice(LatticeKind::Square, 0);
  Region site = built.region;
  VertexId root = built.lattice->root();

  SUBCASE("free spins") {
    EdgeCouplings zero{std::vector<double>(site.edges().size(), 0.0)};
    CHECK(ising_partition_plus(site, zero) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(spin_correlation(site, zero, std::vector<VertexId>{root}) ==
          doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("single boundary edge gives tanh(K)") {
    for (double k_value : {0.3, 1.0, 2.5}) {
      EdgeCouplings k{std::vector<double>(site.edges().size(), 0.0)};
      k.k[0] = k_value;
      CHECK(spin_correlation(site, k, std::vector<VertexId>{root}) ==
            doctest::Approx(std::tanh(k_value)).epsilon(1e-13));
    }
  }

  SUBCASE("four equal boundary edges give tanh(4K)") {
    for (double k_value : {0.2, 0.7}) {
      EdgeCouplings k{std::vector<double>(site.edges().size(), k_value)};
      CHECK(spin_correlation(site, k, std::vector<VertexId>{root}) ==
            doctest::Approx(std::tanh(4.0 * k_value)).epsilon(1e-13));
    }
  }

  SUBCASE("spin cap is enforced") {
    auto big = build_lattice(LatticeKind::Square, 30, 2);
    EdgeCouplings k{std::vector<double>(big.region.edges().size(), 0.0)};
    CHECK_THROWS_AS(ising_partition_plus(big.region, k), EnumerationCapError);
  }
}

TEST_CASE("decomposition weights") {
  PotentialSpec sos = PotentialSpec::sos();

  SUBCASE("single site at absolute height 2") {
    auto built = build_lattice(LatticeKind::Square, 0);
    AbsHeightProfile profile = profile_from(built.region, {{{0, 0}, 2}});
    double w = decomposition_weight(profile, sos, 1.0);
    CHECK(w == doctest::Approx(2.0 * std::exp(-8.0)).epsilon(1e-12));

    // enumeration oracle: weight(phi = 2) + weight(phi = -2)
    std::vector<int> zero = uniform_heights(*built.lattice, 0);
    ExactTable table = enumerate_measure(built.region, zero, sos, 1.0, 3);
    double direct = 0.0;
    for (std::size_t idx = 0; idx < table.size(); ++idx)
      if (std::abs(table.height_at(idx, 0)) == 2)
        direct += table.weight(idx) * std::exp(table.log_shift());
    CHECK(w == doctest::Approx(direct).epsilon(1e-12));
  }

  SUBCASE("the zero profile has unit weight") {
    for (int radius : {0, 1}) {
      auto built = build_lattice(LatticeKind::Square, radius);
      AbsHeightProfile profile = profile_from(built.region, {});
      CHECK(decomposition_weight(profile, sos, 1.0) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("decomposition identity against full enumeration") {
  auto lattice = PlanarLattice::build(LatticeKind::Square, 3);
  Region region = Region::make(lattice, {lattice->find({0, 0}), lattice->find({1, 0})});
  CounterRng rng(41, 0);
  const int m = 3;

  for (const PotentialSpec& pot :
       {PotentialSpec::sos(), PotentialSpec::discrete_gaussian()}) {
    for (double beta : {0.25, 1.0}) {
      for (int draw = 0; draw < 3; ++draw) {
        std::vector<int> psi(lattice->size(), 0);
        if (draw > 0)
          for (VertexId v : region.boundary())
            psi[v] = static_cast<int>(rng.next_below(3));

        ExactTable table = enumerate_measure(region, psi, pot, beta, m);
        std::vector<double> abs_law = table.abs_law_scaled();

        std::vector<int> xi(lattice->size(), 0);
        for (VertexId v : region.boundary()) xi[v] = psi[v];
        KahanSum total;
        for (std::size_t idx = 0; idx < abs_law.size(); ++idx) {
          std::size_t rest = idx;
          for (int j = 0; j < region.interior_size(); ++j) {
            xi[region.interior()[j]] = static_cast<int>(rest % (m + 1));
            rest /= (m + 1);
          }
          AbsHeightProfile profile = AbsHeightProfile::make(region, xi);
          double log_dec = log_decomposition_weight(profile, pot, beta);
          double log_tab = std::log(abs_law[idx]) + table.log_shift();
          CHECK(std::abs(std::expm1(log_dec - log_tab)) < 1e-10);
          total.add(std::exp(log_dec - table.log_z()));
        }
        CHECK(std::abs(total.value() - 1.0) < 1e-10);
      }
    }
  }
}

TEST_CASE("zero count ignores boundary zeros") {
  auto built = build_lattice(LatticeKind::Square, 0);
  AbsHeightProfile all_zero = profile_from(built.region, {});
  CHECK(all_zero.zero_count() == 1);  // only the single interior vertex
  AbsHeightProfile busy = profile_from(built.region, {{{0, 0}, 2}});
  CHECK(busy.zero_count() == 0);
}

TEST_CASE("GKS holds on exhaustive small enumerations") {
  auto lattice = PlanarLattice::build(LatticeKind::Square, 3);
  std::vector<std::vector<Coord>> shapes = {
      {{0, 0}},
      {{0, 0}, {1, 0}},
      {{0, 0}, {1, 0}, {0, 1}},
      {{0, 0}, {1, 0}, {0, 1}, {1, 1}},
  };
  CounterRng rng(43, 0);
  for (const auto& shape : shapes) {
    std::vector<VertexId> ids;
    for (Coord c : shape) ids.push_back(lattice->find(c));
    Region region = Region::make(lattice, ids);
    for (int draw = 0; draw < 10; ++draw) {
      EdgeCouplings k{std::vector<double>()};
      for (std::size_t e = 0; e < region.edges().size(); ++e)
        k.k.push_back(1.5 * rng.next_double());

      // first and second GKS over all subsets A, B of the interior
      const int sites = region.interior_size();
      const std::size_t subsets = std::size_t{1} << sites;
      std::vector<double> corr(subsets);
      for (std::size_t s = 0; s < subsets; ++s) {
        std::vector<VertexId> a;
        for (int j = 0; j < sites; ++j)
          if ((s >> j) & 1) a.push_back(region.interior()[j]);
        corr[s] = spin_correlation(region, k, a);
      }
      for (std::size_t s = 0; s < subsets; ++s) CHECK(corr[s] >= -1e-12);
      for (std::size_t a = 0; a < subsets; ++a)
        for (std::size_t b = 0; b < subsets; ++b)
          CHECK(corr[a ^ b] >= corr[a] * corr[b] - 1e-12);
    }
  }
}

TEST_CASE("exponential GKS averages equal partition ratios") {
  auto lattice = PlanarLattice::build(LatticeKind::Square, 3);
  Region region = Region::make(
      lattice, {lattice->find({0, 0}), lattice->find({1, 0}), lattice->find({0, 1})});
  CounterRng rng(47, 0);
  for (int draw = 0; draw < 20; ++draw) {
    EdgeCouplings k{std::vector<double>()}, h{std::vector<double>()};
    for (std::size_t e = 0; e < region.edges().size(); ++e) {
      k.k.push_back(rng.next_double());
      h.k.push_back(rng.next_double());
    }

    // direct weighted average of exp(sum sigma H) in the K-model
    const int sites = region.interior_size();
    const std::size_t configs = std::size_t{1} << sites;
    KahanSum num, den;
    for (std::size_t mask = 0; mask < configs; ++mask) {
      double energy_k = 0.0, energy_h = 0.0;
      for (std::size_t e = 0; e < region.edges().size(); ++e) {
        const Edge& edge = region.edges()[e];
        int pu = region.interior_index(edge.u);
        int pv = region.interior_index(edge.v);
        int su = pu >= 0 ? 1 - 2 * static_cast<int>((mask >> pu) & 1) : 1;
        int sv = pv >= 0 ? 1 - 2 * static_cast<int>((mask >> pv) & 1) : 1;
        energy_k += su * sv * k.k[e];
        energy_h += su * sv * h.k[e];
      }
      double w = std::exp(energy_k - 20.0);
      num.add(w * std::exp(energy_h));
      den.add(w);
    }
    double direct = num.value() / den.value();

    EdgeCouplings sum = k;
    for (std::size_t e = 0; e < sum.k.size(); ++e) sum.k[e] += h.k[e];
    double ratio = std::exp(ising_log_partition_plus(region, sum) -
                            ising_log_partition_plus(region, k));
    CHECK(direct == doctest::Approx(ratio).epsilon(1e-11));
    CHECK(ratio >= 1.0 - 1e-12);
  }
}

TEST_CASE("FK sign sampling") {
  CounterRng rng(53, 0);

  SUBCASE("zero couplings give i.i.d. fair signs with +1 boundary") {
    auto built = build_lattice(LatticeKind::Square, 1);
    AbsHeightProfile profile = profile_from(built.region, {{{0, 0}, 1}, {{1, 0}, 2}});
    EdgeCouplings zero{std::vector<double>(built.region.edges().size(), 0.0)};
    const int samples = 40000;
    double sum_root = 0.0;
    for (int s = 0; s < samples; ++s) {
      SpinConfig spin = sample_signs_fk(profile, zero, rng);
      for (VertexId b : built.region.boundary()) CHECK(spin.sigma[b] == 1);
      sum_root += spin.sigma[built.lattice->root()];
    }
    double mean = sum_root / samples;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(samples)));
  }

  SUBCASE("a strong boundary edge pins the spin") {
    auto built = build_lattice(LatticeKind::Square, 0);
    AbsHeightProfile profile = profile_from(built.region, {{{0, 0}, 1}});
    EdgeCouplings k{std::vector<double>(built.region.edges().size(), 0.0)};
    k.k[0] = 4.0;  // open with probability 1 - e^{-8}
    int plus = 0;
    const int samples = 20000;
    for (int s = 0; s < samples; ++s)
      plus += sample_signs_fk(profile, k, rng).sigma[built.lattice->root()] == 1;
    CHECK(static_cast<double>(plus) / samples > 0.999);
  }

  SUBCASE("Edwards-Sokal sampling matches the exact spin law on a 2x2 block") {
    auto lattice = PlanarLattice::build(LatticeKind::Square, 3);
    Region region =
        Region::make(lattice, {lattice->find({0, 0}), lattice->find({1, 0}),
                               lattice->find({0, 1}), lattice->find({1, 1})});
    std::vector<int> ones(lattice->size(), 1);
    AbsHeightProfile profile = AbsHeightProfile::make(region, ones);
    EdgeCouplings k = couplings_from_abs(profile, PotentialSpec::sos(), 1.0);

    // exact law over the 16 spin configurations
    const std::size_t configs = 16;
    std::vector<double> exact(configs, 0.0);
    double z = 0.0;
    for (std::size_t mask = 0; mask < configs; ++mask) {
      double energy = 0.0;
      for (std::size_t e = 0; e < region.edges().size(); ++e) {
        const Edge& edge = region.edges()[e];
        int pu = region.interior_index(edge.u);
        int pv = region.interior_index(edge.v);
        int su = pu >= 0 ? 1 - 2 * static_cast<int>((mask >> pu) & 1) : 1;
        int sv = pv >= 0 ? 1 - 2 * static_cast<int>((mask >> pv) & 1) : 1;
        energy += su * sv * k.k[e];
      }
      exact[mask] = std::exp(energy);
      z += exact[mask];
    }
    for (double& w : exact) w /= z;

    const int samples = 100000;
    std::vector<double> empirical(configs, 0.0);
    double sum_root = 0.0;
    for (int s = 0; s < samples; ++s) {
      SpinConfig spin = sample_signs_fk(profile, k, rng);
      std::size_t mask = 0;
      for (int j = 0; j < region.interior_size(); ++j)
        if (spin.sigma[region.interior()[j]] < 0) mask |= std::size_t{1} << j;
      empirical[mask] += 1.0 / samples;
      sum_root += spin.sigma[lattice->root()];
    }
    CHECK(testsupport::total_variation(exact, empirical) < 0.02);

    double exact_mean =
        spin_correlation(region, k, std::vector<VertexId>{lattice->root()});
    double se = std::sqrt((1.0 - exact_mean * exact_mean) / samples);
    CHECK(std::abs(sum_root / samples - exact_mean) < 3.0 * se + 1e-9);
  }
}
