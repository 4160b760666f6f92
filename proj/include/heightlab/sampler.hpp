#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "heightlab/gibbs.hpp"
#include "heightlab/ising.hpp"
#include "heightlab/lattice.hpp"
#include "heightlab/potential.hpp"
#include "heightlab/rng.hpp"

namespace heightlab {

struct ChainState {
  HeightConfig config;
  long sweeps = 0;
  CounterRng rng;
};

ChainState make_chain(Region region, const std::vector<int>& boundary, int m,
                      std::uint64_t seed, std::uint64_t stream);

// Precomputed single-site heat-bath kernel; visits the interior in id order
// and resamples each height from its exact conditional.
class HeatBathKernel {
 public:
  HeatBathKernel(const Region& region, const TiltedPotential& pot, double beta, int m);

  void sweep(ChainState& state) const;
  int m() const { return m_; }

 private:
  struct Term {
    VertexId y;
    int sign;  // +1 when the site is the tail of the canonical direction
    int off;
  };
  const Region* region_;
  double beta_;
  int m_;
  int reach_;
  std::vector<double> lut_;
  std::vector<std::vector<Term>> terms_;  // per interior position
};

void heat_bath_sweep(ChainState& state, const TiltedPotential& pot, double beta, int m);

// Resample all signs of phi conditional on |phi| via the FK coupling;
// preserves |phi| pointwise. Needs a symmetric potential and nonnegative
// boundary heights.
void sign_cluster_move(ChainState& state, const PotentialSpec& v, double beta);

struct McConfig {
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  long burnin = 1000;
  int batches = 32;
  long sweeps_per_batch = 100;
  int cluster_every = 1;  // 0 = heat-bath only
};

struct ChainStats {
  double second_moment = 0.0;
  double second_moment_stderr = 0.0;
  double mean = 0.0;
  double mean_stderr = 0.0;
  double truncation_fraction = 0.0;  // site-sweep samples at |h| = m
  bool truncation_warning = false;
  int max_abs_height = 0;
  long measured_sweeps = 0;
  std::uint64_t seed = 0;
  int m = 0;
};

// Long-chain statistics of the root height: batch-means error bars on phi_r
// and phi_r^2.
ChainStats run_chain(const Region& region, const std::vector<int>& boundary,
                     const TiltedPotential& pot, double beta, int m, const McConfig& mc);

// Single-copy contour statistics: probability that the exterior contour of
// {phi >= level} within the region surrounds the root.
struct ContourStats {
  ChainStats chain;
  double p_surround = 0.0;
  double p_surround_stderr = 0.0;
};

ContourStats run_contour_chain(const Region& region, const Region& contour_window,
                               const std::vector<int>& boundary, const TiltedPotential& pot,
                               double beta, int m, const McConfig& mc, int level);

inline constexpr int kZetaInfinity = std::numeric_limits<int>::max();

// zeta_x = phi_x + 1, phi_x, or infinity according to the sign of
// psi_x = phi'_x - phi_x; computed on the interior.
std::vector<int> zeta_of(const HeightConfig& phi, const HeightConfig& phi_prime);

// Two independent copies with their derived difference and zeta fields.
struct TwoCopyState {
  ChainState first;
  ChainState second;

  std::vector<int> psi() const;   // phi' - phi, lattice-indexed
  std::vector<int> zeta() const { return zeta_of(first.config, second.config); }
};

struct TwoCopyConfig {
  McConfig mc;
  bool diagnostic_equal_streams = false;  // forces phi' to replay phi
};

struct TwoCopyStats {
  double psi_mean = 0.0;
  double psi_stderr = 0.0;
  double p_psi_nonneg = 0.0;
  double p_psi_nonneg_stderr = 0.0;
  double p_surround = 0.0;
  double p_surround_stderr = 0.0;
  double truncation_fraction = 0.0;
  bool truncation_warning = false;
  long measured_sweeps = 0;
};

// Two independent copies (phi, phi'); reports statistics of psi = phi' - phi
// at the root, the contour statistics of {psi >= 0}, and validates the zeta
// invariants on every recorded sample.
TwoCopyStats two_copy_run(const Region& region, const Region& contour_window,
                          const std::vector<int>& boundary, const TiltedPotential& pot,
                          double beta, int m, const TwoCopyConfig& cfg);

}  // namespace heightlab
