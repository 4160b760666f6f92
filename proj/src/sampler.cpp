#include "heightlab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "heightlab/errors.hpp"
#include "heightlab/kahan.hpp"

namespace heightlab {

namespace {

constexpr double kTruncationWarnLevel = 1e-4;

void check_boundary_window(const Region& region, const std::vector<int>& boundary, int m) {
  if (static_cast<int>(boundary.size()) != region.lattice().size())
    throw std::invalid_argument("boundary vector must cover the lattice window");
  for (VertexId v : region.boundary())
    if (std::abs(boundary[v]) > m)
      throw std::invalid_argument("boundary height outside the truncation window");
}

// Batch-means accumulator: mean over batches plus the batch-means stderr.
class BatchAccumulator {
 public:
  BatchAccumulator(int batches, long sweeps_per_batch)
      : sweeps_per_batch_(sweeps_per_batch) {
    means_.reserve(batches);
  }

  void add(double x) {
    sum_ += x;
    if (++filled_ == sweeps_per_batch_) {
      means_.push_back(sum_ / static_cast<double>(sweeps_per_batch_));
      sum_ = 0.0;
      filled_ = 0;
    }
  }

  double mean() const {
    KahanSum s;
    for (double v : means_) s.add(v);
    return s.value() / static_cast<double>(means_.size());
  }

  double stderr_of_mean() const {
    const std::size_t b = means_.size();
    if (b < 2) return 0.0;
    double m = mean();
    KahanSum ss;
    for (double v : means_) ss.add((v - m) * (v - m));
    return std::sqrt(ss.value() / static_cast<double>(b * (b - 1)));
  }

 private:
  long sweeps_per_batch_;
  long filled_ = 0;
  double sum_ = 0.0;
  std::vector<double> means_;
};

void validate_mc(const McConfig& mc) {
  if (mc.burnin < 0) throw std::invalid_argument("burnin must be >= 0");
  if (mc.batches < 2) throw std::invalid_argument("need at least 2 batches");
  if (mc.sweeps_per_batch < 1) throw std::invalid_argument("need at least 1 sweep per batch");
  if (mc.cluster_every < 0) throw std::invalid_argument("cluster_every must be >= 0");
}

}  // namespace

ChainState make_chain(Region region, const std::vector<int>& boundary, int m,
                      std::uint64_t seed, std::uint64_t stream) {
  TruncationWindow window(m);
  check_boundary_window(region, boundary, m);
  ChainState state{HeightConfig::make(std::move(region), boundary, 0), 0,
                   CounterRng(seed, stream)};
  return state;
}

HeatBathKernel::HeatBathKernel(const Region& region, const TiltedPotential& pot, double beta,
                               int m)
    : region_(&region), beta_(beta), m_(m) {
  int max_off = 0;
  const auto& interior = region.interior();
  terms_.resize(interior.size());
  for (std::size_t pos = 0; pos < interior.size(); ++pos) {
    VertexId x = interior[pos];
    for (VertexId y : region.lattice().neighbours(x)) {
      Term t;
      t.y = y;
      if (x < y) {
        t.sign = 1;
        t.off = pot.shift(y) - pot.shift(x);
      } else {
        t.sign = -1;
        t.off = pot.shift(x) - pot.shift(y);
      }
      max_off = std::max(max_off, std::abs(t.off));
      terms_[pos].push_back(t);
    }
  }
  reach_ = 2 * m + max_off;
  if (reach_ > pot.base().window())
    throw WindowError("heat-bath reach " + std::to_string(reach_) +
                      " exceeds the certified window of '" + pot.base().name() + "'");
  lut_.resize(2 * reach_ + 1);
  for (int z = -reach_; z <= reach_; ++z) lut_[z + reach_] = pot.base()(z);
}

void HeatBathKernel::sweep(ChainState& state) const {
  const auto& interior = region_->interior();
  const int levels = 2 * m_ + 1;
  std::vector<double> logit(levels);
  std::vector<int>& h = state.config.h;
  for (std::size_t pos = 0; pos < interior.size(); ++pos) {
    double best = -std::numeric_limits<double>::infinity();
    for (int k = -m_; k <= m_; ++k) {
      double sum = 0.0;
      for (const Term& t : terms_[pos]) sum += lut_[t.sign * (h[t.y] - k) + t.off + reach_];
      double l = -beta_ * sum;
      logit[k + m_] = l;
      best = std::max(best, l);
    }
    double total = 0.0;
    for (int i = 0; i < levels; ++i) {
      logit[i] = std::exp(logit[i] - best);
      total += logit[i];
    }
    double target = state.rng.next_double() * total;
    double acc = 0.0;
    int chosen = levels - 1;
    for (int i = 0; i < levels; ++i) {
      acc += logit[i];
      if (acc > target) {
        chosen = i;
        break;
      }
    }
    h[interior[pos]] = chosen - m_;
  }
  ++state.sweeps;
}

void heat_bath_sweep(ChainState& state, const TiltedPotential& pot, double beta, int m) {
  HeatBathKernel(state.config.region, pot, beta, m).sweep(state);
}

void sign_cluster_move(ChainState& state, const PotentialSpec& v, double beta) {
  const Region& region = state.config.region;
  for (VertexId x : region.boundary())
    if (state.config.h[x] < 0)
      throw std::invalid_argument("sign cluster move needs nonnegative boundary heights");
  AbsHeightProfile profile = AbsHeightProfile::from_heights(state.config);
  EdgeCouplings couplings = couplings_from_abs(profile, v, beta);
  SpinConfig signs = sample_signs_fk(profile, couplings, state.rng);
  for (VertexId x : region.interior())
    state.config.h[x] = signs.sigma[x] * profile.xi[x];
}

namespace {

struct LoopObservers {
  BatchAccumulator* mean_acc = nullptr;
  BatchAccumulator* second_acc = nullptr;
  long edge_samples = 0;
  long site_samples = 0;
  int max_abs = 0;
};

template <typename Extra>
ChainStats run_loop(const Region& region, const std::vector<int>& boundary,
                    const TiltedPotential& pot, double beta, int m, const McConfig& mc,
                    Extra&& extra) {
  validate_mc(mc);
  VertexId root = region.lattice().root();
  if (!region.in_interior(root))
    throw std::invalid_argument("chain statistics target the root vertex; include it");
  if (mc.cluster_every > 0) {
    if (!pot.flat() || !pot.base().symmetric())
      throw std::invalid_argument("the sign cluster move needs a flat symmetric potential");
    for (VertexId v : region.boundary())
      if (boundary[v] < 0)
        throw std::invalid_argument("the sign cluster move needs nonnegative boundaries");
  }

  ChainState state = make_chain(region, boundary, m, mc.seed, mc.stream);
  HeatBathKernel kernel(region, pot, beta, m);
  BatchAccumulator mean_acc(mc.batches, mc.sweeps_per_batch);
  BatchAccumulator second_acc(mc.batches, mc.sweeps_per_batch);

  const long measured = static_cast<long>(mc.batches) * mc.sweeps_per_batch;
  const long total = mc.burnin + measured;
  long edge_samples = 0;
  int max_abs = 0;
  for (long sweep = 0; sweep < total; ++sweep) {
    kernel.sweep(state);
    if (mc.cluster_every > 0 && (sweep + 1) % mc.cluster_every == 0)
      sign_cluster_move(state, pot.base(), beta);
    if (sweep < mc.burnin) continue;
    double hr = state.config.h[root];
    mean_acc.add(hr);
    second_acc.add(hr * hr);
    for (VertexId v : region.interior()) {
      int a = std::abs(state.config.h[v]);
      max_abs = std::max(max_abs, a);
      if (a == m) ++edge_samples;
    }
    extra(state);
  }

  ChainStats stats;
  stats.mean = mean_acc.mean();
  stats.mean_stderr = mean_acc.stderr_of_mean();
  stats.second_moment = second_acc.mean();
  stats.second_moment_stderr = second_acc.stderr_of_mean();
  stats.measured_sweeps = measured;
  stats.truncation_fraction =
      static_cast<double>(edge_samples) /
      (static_cast<double>(measured) * region.interior_size());
  stats.truncation_warning = stats.truncation_fraction > kTruncationWarnLevel;
  stats.max_abs_height = max_abs;
  stats.seed = mc.seed;
  stats.m = m;
  return stats;
}

}  // namespace

ChainStats run_chain(const Region& region, const std::vector<int>& boundary,
                     const TiltedPotential& pot, double beta, int m, const McConfig& mc) {
  return run_loop(region, boundary, pot, beta, m, mc, [](const ChainState&) {});
}

ContourStats run_contour_chain(const Region& region, const Region& contour_window,
                               const std::vector<int>& boundary, const TiltedPotential& pot,
                               double beta, int m, const McConfig& mc, int level) {
  BatchAccumulator surround_acc(mc.batches, mc.sweeps_per_batch);
  VertexId root = region.lattice().root();
  std::vector<VertexId> set;
  ContourStats out;
  out.chain = run_loop(region, boundary, pot, beta, m, mc, [&](const ChainState& state) {
    set.clear();
    for (VertexId v : region.interior())
      if (state.config.h[v] >= level) set.push_back(v);
    ContourDecomposition decomp = exterior_contour(set, contour_window);
    surround_acc.add(surrounds(decomp, root) ? 1.0 : 0.0);
  });
  out.p_surround = surround_acc.mean();
  out.p_surround_stderr = surround_acc.stderr_of_mean();
  return out;
}

std::vector<int> TwoCopyState::psi() const {
  std::vector<int> out(first.config.h.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = second.config.h[i] - first.config.h[i];
  return out;
}

std::vector<int> zeta_of(const HeightConfig& phi, const HeightConfig& phi_prime) {
  if (phi.h.size() != phi_prime.h.size())
    throw std::invalid_argument("zeta needs two copies on the same lattice");
  std::vector<int> zeta(phi.h.size(), 0);
  for (std::size_t i = 0; i < phi.h.size(); ++i) {
    if (phi.h[i] < phi_prime.h[i])
      zeta[i] = phi.h[i] + 1;
    else if (phi.h[i] == phi_prime.h[i])
      zeta[i] = phi.h[i];
    else
      zeta[i] = kZetaInfinity;
  }
  return zeta;
}

namespace {

void check_zeta_invariants(const Region& region, const HeightConfig& phi,
                           const HeightConfig& phi_prime, const std::vector<int>& zeta) {
  for (VertexId v : region.interior()) {
    int psi = phi_prime.h[v] - phi.h[v];
    bool finite = zeta[v] != kZetaInfinity;
    if (finite != (psi >= 0)) throw std::logic_error("zeta finiteness disagrees with psi >= 0");
    if (phi.h[v] <= phi_prime.h[v]) {
      if (!(phi.h[v] <= zeta[v] && zeta[v] <= phi_prime.h[v]))
        throw std::logic_error("zeta escapes the [phi, phi'] sandwich");
    }
  }
}

}  // namespace

TwoCopyStats two_copy_run(const Region& region, const Region& contour_window,
                          const std::vector<int>& boundary, const TiltedPotential& pot,
                          double beta, int m, const TwoCopyConfig& cfg) {
  const McConfig& mc = cfg.mc;
  validate_mc(mc);
  VertexId root = region.lattice().root();
  if (!region.in_interior(root))
    throw std::invalid_argument("chain statistics target the root vertex; include it");
  if (mc.cluster_every > 0) {
    if (!pot.flat() || !pot.base().symmetric())
      throw std::invalid_argument("the sign cluster move needs a flat symmetric potential");
    for (VertexId v : region.boundary())
      if (boundary[v] < 0)
        throw std::invalid_argument("the sign cluster move needs nonnegative boundaries");
  }

  std::uint64_t stream_a = 2 * mc.stream;
  std::uint64_t stream_b = cfg.diagnostic_equal_streams ? stream_a : 2 * mc.stream + 1;
  TwoCopyState copies{make_chain(region, boundary, m, mc.seed, stream_a),
                      make_chain(region, boundary, m, mc.seed, stream_b)};
  ChainState& a = copies.first;
  ChainState& b = copies.second;
  HeatBathKernel kernel(region, pot, beta, m);

  BatchAccumulator psi_acc(mc.batches, mc.sweeps_per_batch);
  BatchAccumulator nonneg_acc(mc.batches, mc.sweeps_per_batch);
  BatchAccumulator surround_acc(mc.batches, mc.sweeps_per_batch);

  const long measured = static_cast<long>(mc.batches) * mc.sweeps_per_batch;
  const long total = mc.burnin + measured;
  long edge_samples = 0;
  std::vector<VertexId> set;
  for (long sweep = 0; sweep < total; ++sweep) {
    kernel.sweep(a);
    kernel.sweep(b);
    if (mc.cluster_every > 0 && (sweep + 1) % mc.cluster_every == 0) {
      sign_cluster_move(a, pot.base(), beta);
      sign_cluster_move(b, pot.base(), beta);
    }
    if (sweep < mc.burnin) continue;

    std::vector<int> zeta = copies.zeta();
    check_zeta_invariants(region, a.config, b.config, zeta);

    double psi_r = b.config.h[root] - a.config.h[root];
    psi_acc.add(psi_r);
    nonneg_acc.add(psi_r >= 0 ? 1.0 : 0.0);

    set.clear();
    for (VertexId v : region.interior())
      if (b.config.h[v] - a.config.h[v] >= 0) set.push_back(v);
    ContourDecomposition decomp = exterior_contour(set, contour_window);
    surround_acc.add(surrounds(decomp, root) ? 1.0 : 0.0);

    for (VertexId v : region.interior()) {
      if (std::abs(a.config.h[v]) == m) ++edge_samples;
      if (std::abs(b.config.h[v]) == m) ++edge_samples;
    }
  }

  TwoCopyStats stats;
  stats.psi_mean = psi_acc.mean();
  stats.psi_stderr = psi_acc.stderr_of_mean();
  stats.p_psi_nonneg = nonneg_acc.mean();
  stats.p_psi_nonneg_stderr = nonneg_acc.stderr_of_mean();
  stats.p_surround = surround_acc.mean();
  stats.p_surround_stderr = surround_acc.stderr_of_mean();
  stats.measured_sweeps = measured;
  stats.truncation_fraction =
      static_cast<double>(edge_samples) /
      (2.0 * static_cast<double>(measured) * region.interior_size());
  stats.truncation_warning = stats.truncation_fraction > kTruncationWarnLevel;
  return stats;
}

}  // namespace heightlab
