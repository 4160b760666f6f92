#include "heightlab/ising.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "heightlab/errors.hpp"
#include "heightlab/kahan.hpp"

namespace heightlab {

namespace {

constexpr std::size_t kSpinCap = std::size_t{1} << 24;

void require_symmetric(const PotentialSpec& v) {
  if (!v.symmetric())
    throw std::invalid_argument("potential '" + v.name() + "' must be symmetric here");
}

struct SpinEdge {
  int upos, vpos;  // interior index or -1 for a (+1) boundary vertex
  double k;
};

std::vector<SpinEdge> spin_edges(const Region& region, const EdgeCouplings& couplings) {
  if (couplings.k.size() != region.edges().size())
    throw std::invalid_argument("couplings do not match the region edge list");
  std::vector<SpinEdge> edges;
  edges.reserve(couplings.k.size());
  for (std::size_t i = 0; i < couplings.k.size(); ++i) {
    const Edge& e = region.edges()[i];
    edges.push_back({region.interior_index(e.u), region.interior_index(e.v), couplings.k[i]});
  }
  return edges;
}

// Calls fn(mask, scaled_weight) for every spin configuration, with weights
// scaled by exp(-sum_e |K_e|) so the all-plus state has scaled weight <= 1.
template <typename Fn>
double for_each_spin_weight(const Region& region, const EdgeCouplings& couplings, Fn&& fn) {
  const int n = region.interior_size();
  if (n > 24 || (std::size_t{1} << n) > kSpinCap)
    throw EnumerationCapError("spin enumeration over " + std::to_string(n) +
                              " sites exceeds the 2^24 cap");
  auto edges = spin_edges(region, couplings);
  double shift = 0.0;
  for (const SpinEdge& e : edges) shift += std::abs(e.k);

  const std::size_t total = std::size_t{1} << n;
  double z = 0.0;
  for (std::size_t mask = 0; mask < total; ++mask) {
    double energy = 0.0;
    for (const SpinEdge& e : edges) {
      int su = e.upos >= 0 ? 1 - 2 * static_cast<int>((mask >> e.upos) & 1) : 1;
      int sv = e.vpos >= 0 ? 1 - 2 * static_cast<int>((mask >> e.vpos) & 1) : 1;
      energy += su * sv * e.k;
    }
    double w = std::exp(energy - shift);
    z += w;
    fn(mask, w);
  }
  return z;  // scaled by exp(-shift)
}

double coupling_shift(const Region& region, const EdgeCouplings& couplings) {
  double shift = 0.0;
  for (double k : couplings.k) shift += std::abs(k);
  (void)region;
  return shift;
}

}  // namespace

AbsHeightProfile AbsHeightProfile::make(Region region, std::vector<int> xi) {
  if (static_cast<int>(xi.size()) != region.lattice().size())
    throw std::invalid_argument("profile vector must cover the lattice window");
  for (VertexId v : region.interior())
    if (xi[v] < 0) throw std::invalid_argument("absolute-height profile must be >= 0");
  for (VertexId v : region.boundary())
    if (xi[v] < 0) throw std::invalid_argument("absolute-height profile must be >= 0");
  return {std::move(region), std::move(xi)};
}

AbsHeightProfile AbsHeightProfile::from_heights(const HeightConfig& cfg) {
  std::vector<int> xi(cfg.h.size(), 0);
  for (std::size_t i = 0; i < cfg.h.size(); ++i) xi[i] = std::abs(cfg.h[i]);
  return {cfg.region, std::move(xi)};
}

int AbsHeightProfile::zero_count() const {
  int z = 0;
  for (VertexId v : region.interior())
    if (xi[v] == 0) ++z;
  return z;
}

EdgeCouplings couplings_from_abs(const AbsHeightProfile& profile, const PotentialSpec& v,
                                 double beta) {
  require_symmetric(v);
  EdgeCouplings couplings;
  couplings.k.reserve(profile.region.edges().size());
  for (const Edge& e : profile.region.edges()) {
    int a = profile.xi[e.u];
    int b = profile.xi[e.v];
    double k = -0.5 * beta * (v(b - a) - v(b + a));
    if (k < -1e-6)
      throw std::logic_error("negative Ising coupling from a symmetric convex potential");
    couplings.k.push_back(std::max(k, 0.0));
  }
  return couplings;
}

double ising_log_partition_plus(const Region& region, const EdgeCouplings& couplings) {
  double shift = coupling_shift(region, couplings);
  double z = for_each_spin_weight(region, couplings, [](std::size_t, double) {});
  return shift + std::log(z);
}

double ising_partition_plus(const Region& region, const EdgeCouplings& couplings) {
  return std::exp(ising_log_partition_plus(region, couplings));
}

double spin_correlation(const Region& region, const EdgeCouplings& couplings,
                        std::span<const VertexId> a) {
  std::vector<int> positions;
  for (VertexId v : a) {
    int pos = region.interior_index(v);
    if (pos >= 0) positions.push_back(pos);
    // boundary vertices carry sigma = +1 and drop out of the product
  }
  KahanSum num, den;
  for_each_spin_weight(region, couplings, [&](std::size_t mask, double w) {
    int sign = 1;
    for (int pos : positions)
      if ((mask >> pos) & 1) sign = -sign;
    num.add(sign * w);
    den.add(w);
  });
  return num.value() / den.value();
}

double log_decomposition_weight(const AbsHeightProfile& profile, const PotentialSpec& v,
                                double beta) {
  require_symmetric(v);
  KahanSum sum;
  for (const Edge& e : profile.region.edges()) {
    int a = profile.xi[e.u];
    int b = profile.xi[e.v];
    sum.add(v(b - a) + v(b + a));
  }
  EdgeCouplings couplings = couplings_from_abs(profile, v, beta);
  double log_zplus = ising_log_partition_plus(profile.region, couplings);
  return -profile.zero_count() * std::log(2.0) - 0.5 * beta * sum.value() + log_zplus;
}

double decomposition_weight(const AbsHeightProfile& profile, const PotentialSpec& v,
                            double beta) {
  return std::exp(log_decomposition_weight(profile, v, beta));
}

SpinConfig sample_signs_fk(const AbsHeightProfile& profile, const EdgeCouplings& couplings,
                           CounterRng& rng) {
  const Region& region = profile.region;
  auto edges = spin_edges(region, couplings);
  const int n = region.interior_size();
  const int wired = n;  // all boundary vertices contracted into one node

  std::vector<int> parent(n + 1);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  for (const SpinEdge& e : edges) {
    if (e.k < 0) throw std::invalid_argument("FK sampling needs nonnegative couplings");
    double p = 1.0 - std::exp(-2.0 * e.k);
    bool open = rng.next_double() < p;
    if (!open) continue;
    int a = e.upos >= 0 ? e.upos : wired;
    int b = e.vpos >= 0 ? e.vpos : wired;
    int ra = find(a), rb = find(b);
    if (ra != rb) parent[ra] = rb;
  }

  SpinConfig out{region, std::vector<std::int8_t>(region.lattice().size(), 1)};
  int wired_root = find(wired);
  std::vector<std::int8_t> cluster_sign(n + 1, 0);
  cluster_sign[wired_root] = 1;
  const auto& interior = region.interior();
  for (int pos = 0; pos < n; ++pos) {
    int root = find(pos);
    if (cluster_sign[root] == 0)
      cluster_sign[root] = rng.next_bernoulli(0.5) ? 1 : -1;
    out.sigma[interior[pos]] = cluster_sign[root];
  }
  return out;
}

}  // namespace heightlab
