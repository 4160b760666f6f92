#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "heightlab/gibbs.hpp"
#include "heightlab/lattice.hpp"
#include "heightlab/potential.hpp"
#include "heightlab/rng.hpp"

namespace heightlab {

// Absolute-height profile xi = |phi| on region and boundary vertices.
struct AbsHeightProfile {
  Region region;
  std::vector<int> xi;  // lattice-indexed, >= 0 where meaningful

  static AbsHeightProfile make(Region region, std::vector<int> xi);
  static AbsHeightProfile from_heights(const HeightConfig& cfg);

  // Number of zeros of xi inside the region (boundary zeros excluded).
  int zero_count() const;
};

// Ferromagnetic couplings on the region's edge list (same order).
struct EdgeCouplings {
  std::vector<double> k;
};

// K_xy = -(beta/2) (V(xi_y - xi_x) - V(xi_y + xi_x)); nonnegative for
// symmetric convex V and nonnegative xi, and zero when either endpoint is 0.
EdgeCouplings couplings_from_abs(const AbsHeightProfile& profile, const PotentialSpec& v,
                                 double beta);

// Partition function of the Ising model on the region with +1 boundary:
// sum over sigma in {+-1}^interior of exp(sum_{xy in E} sigma_x sigma_y K_xy).
// Exact enumeration, capped at 2^24 spins.
double ising_partition_plus(const Region& region, const EdgeCouplings& couplings);
double ising_log_partition_plus(const Region& region, const EdgeCouplings& couplings);

// <sigma_A> in the same measure; A may contain boundary vertices (spin +1).
double spin_correlation(const Region& region, const EdgeCouplings& couplings,
                        std::span<const VertexId> a);

// Weight of an absolute-height profile in the decomposition of Z_Lambda(psi):
// 2^{-zeros} * exp(-(beta/2) sum [V(xi_y-xi_x) + V(xi_y+xi_x)]) * Z^+(K^xi).
double decomposition_weight(const AbsHeightProfile& profile, const PotentialSpec& v,
                            double beta);
double log_decomposition_weight(const AbsHeightProfile& profile, const PotentialSpec& v,
                                double beta);

struct SpinConfig {
  Region region;
  std::vector<std::int8_t> sigma;  // lattice-indexed; +1 outside the interior
};

// FK (Edwards-Sokal) sampling of the sign field: open edge xy with probability
// 1 - exp(-2 K_xy), wire all boundary vertices into one +1 cluster, and give
// every free cluster an independent fair sign.
SpinConfig sample_signs_fk(const AbsHeightProfile& profile, const EdgeCouplings& couplings,
                           CounterRng& rng);

}  // namespace heightlab
