#include "heightlab/gibbs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "heightlab/errors.hpp"
#include "heightlab/kahan.hpp"

namespace heightlab {

namespace {

constexpr double kRatioSlack = 1e-9;

// Fixed shard count keeps summation order independent of the worker count.
constexpr std::size_t kShards = 64;

void run_sharded(std::size_t total, int threads, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  std::size_t shards = std::min<std::size_t>(kShards, total);
  if (shards == 0) return;
  auto shard_range = [&](std::size_t s) {
    std::size_t lo = total * s / shards;
    std::size_t hi = total * (s + 1) / shards;
    return std::pair<std::size_t, std::size_t>(lo, hi);
  };
  int workers = std::max(1, std::min<int>(threads, static_cast<int>(shards)));
  if (workers == 1) {
    for (std::size_t s = 0; s < shards; ++s) {
      auto [lo, hi] = shard_range(s);
      fn(s, lo, hi);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t s = next.fetch_add(1); s < shards; s = next.fetch_add(1)) {
        auto [lo, hi] = shard_range(s);
        fn(s, lo, hi);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

HeightConfig HeightConfig::make(Region region, const std::vector<int>& boundary,
                                int interior_value) {
  if (static_cast<int>(boundary.size()) != region.lattice().size())
    throw std::invalid_argument("boundary vector must cover the lattice window");
  HeightConfig cfg{std::move(region), boundary};
  for (VertexId v : cfg.region.interior()) cfg.h[v] = interior_value;
  return cfg;
}

std::vector<int> uniform_heights(const PlanarLattice& lattice, int value) {
  return std::vector<int>(lattice.size(), value);
}

double hamiltonian(const HeightConfig& cfg, const TiltedPotential& pot) {
  KahanSum sum;
  for (const Edge& e : cfg.region.edges())
    sum.add(pot.value(e.u, e.v, cfg.h[e.v] - cfg.h[e.u]));
  return sum.value();
}

void ExactTable::decode(std::size_t idx, std::vector<int>& heights) const {
  heights = boundary_;
  const auto& interior = region_.interior();
  for (std::size_t j = 0; j < interior.size(); ++j) heights[interior[j]] = height_at(idx, j);
}

double ExactTable::z() const { return std::exp(log_z_); }

ExactTable enumerate_measure(const Region& region, const std::vector<int>& boundary,
                             const TiltedPotential& pot, double beta, int m,
                             const EnumerateOptions& opts) {
  TruncationWindow window(m);
  if (static_cast<int>(boundary.size()) != region.lattice().size())
    throw std::invalid_argument("boundary vector must cover the lattice window");
  if (beta < 0) throw std::invalid_argument("beta must be >= 0");
  for (VertexId v : region.boundary())
    if (std::abs(boundary[v]) > m)
      throw std::invalid_argument("boundary height outside the truncation window");

  const auto& interior = region.interior();
  const std::size_t sites = interior.size();
  const std::size_t levels = 2 * static_cast<std::size_t>(m) + 1;

  std::size_t total = 1;
  for (std::size_t j = 0; j < sites; ++j) {
    if (total > opts.cap / levels)
      throw EnumerationCapError("enumeration needs more than " + std::to_string(opts.cap) +
                                " configurations; shrink the region or the window");
    total *= levels;
  }

  // Edge terms reduce to a lookup into the base potential: the argument is
  // sgn*(h_v - h_u) + off with |h| <= m, so the table below covers them all.
  struct EdgeTerm {
    int upos, vpos;  // interior index or -1
    int ufix, vfix;  // boundary height when not interior
    int off;
  };
  std::vector<EdgeTerm> terms;
  terms.reserve(region.edges().size());
  int max_off = 0;
  for (const Edge& e : region.edges()) {
    EdgeTerm t;
    t.upos = region.interior_index(e.u);
    t.vpos = region.interior_index(e.v);
    t.ufix = boundary[e.u];
    t.vfix = boundary[e.v];
    t.off = pot.offset(e.u, e.v);
    max_off = std::max(max_off, std::abs(t.off));
    terms.push_back(t);
  }
  const int reach = 2 * m + max_off;
  if (reach > pot.base().window())
    throw WindowError("height differences reach " + std::to_string(reach) +
                      ", beyond the certified window of '" + pot.base().name() + "'");
  std::vector<double> lut(2 * reach + 1);
  for (int z = -reach; z <= reach; ++z) lut[z + reach] = pot.base()(z);

  ExactTable table(region, boundary, pot, beta, m);
  table.stride_.resize(sites);
  std::size_t stride = 1;
  for (std::size_t j = 0; j < sites; ++j) {
    table.stride_[j] = stride;
    stride *= levels;
  }
  table.weight_.resize(total);

  const std::size_t shards = std::min<std::size_t>(kShards, total);
  std::vector<double> shard_max(shards, -std::numeric_limits<double>::infinity());

  // Pass 1: log-weights and the global shift.
  run_sharded(total, opts.threads, [&](std::size_t s, std::size_t lo, std::size_t hi) {
    std::vector<int> digit(sites);
    double local_max = -std::numeric_limits<double>::infinity();
    for (std::size_t idx = lo; idx < hi; ++idx) {
      std::size_t rest = idx;
      for (std::size_t j = 0; j < sites; ++j) {
        digit[j] = static_cast<int>(rest % levels) - m;
        rest /= levels;
      }
      double h = 0.0;
      for (const EdgeTerm& t : terms) {
        int hu = t.upos >= 0 ? digit[t.upos] : t.ufix;
        int hv = t.vpos >= 0 ? digit[t.vpos] : t.vfix;
        h += lut[hv - hu + t.off + reach];
      }
      double logw = -beta * h;
      table.weight_[idx] = logw;
      local_max = std::max(local_max, logw);
    }
    shard_max[s] = local_max;
  });
  double log_shift = *std::max_element(shard_max.begin(), shard_max.end());

  // Pass 2: exponentiate and sum, order fixed by shard then index.
  std::vector<double> shard_z(shards, 0.0);
  std::vector<double> shard_edge(shards, 0.0);
  run_sharded(total, opts.threads, [&](std::size_t s, std::size_t lo, std::size_t hi) {
    KahanSum z;
    KahanSum edge_mass;
    std::vector<int> digit(sites);
    for (std::size_t idx = lo; idx < hi; ++idx) {
      double w = std::exp(table.weight_[idx] - log_shift);
      table.weight_[idx] = w;
      z.add(w);
      std::size_t rest = idx;
      bool at_edge = false;
      for (std::size_t j = 0; j < sites; ++j) {
        int d = static_cast<int>(rest % levels);
        rest /= levels;
        if (d == 0 || d == static_cast<int>(levels) - 1) at_edge = true;
      }
      if (at_edge) edge_mass.add(w);
    }
    shard_z[s] = z.value();
    shard_edge[s] = edge_mass.value();
  });
  KahanSum z_total, edge_total;
  for (std::size_t s = 0; s < shards; ++s) {
    z_total.add(shard_z[s]);
    edge_total.add(shard_edge[s]);
  }

  table.log_shift_ = log_shift;
  table.scaled_z_ = z_total.value();
  table.log_z_ = log_shift + std::log(table.scaled_z_);
  table.truncation_mass_ = edge_total.value() / table.scaled_z_;
  if (!(table.scaled_z_ > 0.0))
    throw std::runtime_error("partition function vanished; weights are not finite-energy");
  return table;
}

std::vector<double> ExactTable::abs_law_scaled() const {
  const std::size_t sites = region_.interior().size();
  const std::size_t levels_abs = static_cast<std::size_t>(m_) + 1;
  std::size_t profiles = 1;
  for (std::size_t j = 0; j < sites; ++j) profiles *= levels_abs;
  std::vector<double> law(profiles, 0.0);
  const std::size_t lv = levels();
  for (std::size_t idx = 0; idx < weight_.size(); ++idx) {
    std::size_t rest = idx;
    std::size_t key = 0;
    std::size_t place = 1;
    for (std::size_t j = 0; j < sites; ++j) {
      int h = static_cast<int>(rest % lv) - m_;
      rest /= lv;
      key += static_cast<std::size_t>(std::abs(h)) * place;
      place *= levels_abs;
    }
    law[key] += weight_[idx];
  }
  return law;
}

SiteMarginal site_marginal(const ExactTable& table, VertexId x) {
  int pos = table.region().interior_index(x);
  if (pos < 0) throw std::invalid_argument("site_marginal: vertex not in the region");
  SiteMarginal out;
  out.m = table.m();
  out.p.assign(table.levels(), 0.0);
  for (std::size_t idx = 0; idx < table.size(); ++idx)
    out.p[table.height_at(idx, pos) + table.m()] += table.weight(idx);
  KahanSum norm;
  for (double v : out.p) norm.add(v);
  for (double& v : out.p) v /= norm.value();
  KahanSum mean, second;
  for (int k = -out.m; k <= out.m; ++k) {
    mean.add(out.prob(k) * k);
    second.add(out.prob(k) * k * k);
  }
  out.mean = mean.value();
  out.second_moment = second.value();
  out.variance = out.second_moment - out.mean * out.mean;
  return out;
}

namespace {

SiteDistribution distribution_from_logits(std::vector<double> logits, int m) {
  double shift = *std::max_element(logits.begin(), logits.end());
  SiteDistribution dist;
  dist.m = m;
  dist.p.resize(logits.size());
  KahanSum norm;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    dist.p[i] = std::exp(logits[i] - shift);
    norm.add(dist.p[i]);
  }
  for (double& v : dist.p) v /= norm.value();
  return dist;
}

}  // namespace

SiteDistribution conditional_site_distribution(std::span<const int> neighbour_heights,
                                               const PotentialSpec& v, double beta, int m) {
  TruncationWindow window(m);
  std::vector<double> logits(2 * m + 1);
  for (int k = -m; k <= m; ++k) {
    double h = 0.0;
    for (int hy : neighbour_heights) h += v(k - hy);
    logits[k + m] = -beta * h;
  }
  return distribution_from_logits(std::move(logits), m);
}

SiteDistribution conditional_at(const Region& region, const std::vector<int>& heights,
                                const TiltedPotential& pot, double beta, int m, VertexId x) {
  if (!region.in_interior(x))
    throw std::invalid_argument("conditional_at: vertex not in the region");
  std::vector<double> logits(2 * m + 1);
  auto nbs = region.lattice().neighbours(x);
  for (int k = -m; k <= m; ++k) {
    double h = 0.0;
    for (VertexId y : nbs) h += pot.value(x, y, heights[y] - k);
    logits[k + m] = -beta * h;
  }
  return distribution_from_logits(std::move(logits), m);
}

RatioBoundReport ratio_bound_audit(const SiteDistribution& dist, double beta, int max_degree) {
  RatioBoundReport report;
  report.bound = std::exp(-beta * max_degree);
  report.worst_ratio = std::numeric_limits<double>::infinity();
  for (int k = -dist.m; k < dist.m; ++k) {
    double ratio = dist.prob(k + 1) / dist.prob(k);
    if (ratio < report.worst_ratio) {
      report.worst_ratio = ratio;
      report.worst_k = k;
    }
    if (ratio < report.bound * (1.0 - kRatioSlack)) report.violating_k.push_back(k);
  }

  report.geometric_applicable = beta <= std::log(2.0) / max_degree + 1e-12;
  if (report.geometric_applicable) {
    KahanSum nonneg, positive;
    for (int k = 0; k <= dist.m; ++k) {
      nonneg.add(dist.prob(k));
      if (k >= 1) positive.add(dist.prob(k));
    }
    report.p_ge1_given_ge0 = positive.value() / nonneg.value();
    report.geometric_pass = report.p_ge1_given_ge0 >= 0.5 - kRatioSlack;
  }
  report.pass = report.violating_k.empty() && report.geometric_pass;
  return report;
}

}  // namespace heightlab
