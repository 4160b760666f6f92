#include "heightlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

#include <bit>
#include <json.hpp>

#include "heightlab/errors.hpp"
#include "heightlab/kahan.hpp"
#include "heightlab/rng.hpp"
#include "heightlab/sampler.hpp"

namespace heightlab {

namespace {

constexpr double kRelSlack = 1e-10;  // violations below rounding are passes
constexpr std::size_t kFlowCap = 10'000;
constexpr std::size_t kUpsetCap = 20;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Max-flow (Dinic) on small graphs with double capacities.

class MaxFlow {
 public:
  explicit MaxFlow(int nodes) : head_(nodes, -1), level_(nodes), iter_(nodes) {}

  void add_edge(int from, int to, double cap) {
    edges_.push_back({to, head_[from], cap});
    head_[from] = static_cast<int>(edges_.size()) - 1;
    edges_.push_back({from, head_[to], 0.0});
    head_[to] = static_cast<int>(edges_.size()) - 1;
  }

  double run(int source, int sink) {
    double flow = 0.0;
    while (bfs(source, sink)) {
      iter_ = head_;
      double f;
      while ((f = dfs(source, sink, std::numeric_limits<double>::infinity())) > kEps)
        flow += f;
    }
    return flow;
  }

  // Flow currently pushed through edge index (as returned by edge_count order).
  double flow_on(int edge_index) const { return edges_[2 * edge_index + 1].cap; }

 private:
  struct E {
    int to;
    int next;
    double cap;
  };
  static constexpr double kEps = 1e-14;

  bool bfs(int source, int sink) {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<int> queue{source};
    level_[source] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      int v = queue[qi];
      for (int e = head_[v]; e >= 0; e = edges_[e].next) {
        if (edges_[e].cap > kEps && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[v] + 1;
          queue.push_back(edges_[e].to);
        }
      }
    }
    return level_[sink] >= 0;
  }

  double dfs(int v, int sink, double limit) {
    if (v == sink) return limit;
    for (int& e = iter_[v]; e >= 0; e = edges_[e].next) {
      E& edge = edges_[e];
      if (edge.cap > kEps && level_[edge.to] == level_[v] + 1) {
        double f = dfs(edge.to, sink, std::min(limit, edge.cap));
        if (f > kEps) {
          edge.cap -= f;
          edges_[e ^ 1].cap += f;
          return f;
        }
      }
    }
    return 0.0;
  }

  std::vector<E> edges_;
  std::vector<int> head_;
  std::vector<int> level_;
  std::vector<int> iter_;
};

bool leq(const std::vector<int>& a, const std::vector<int>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

struct UnionSupport {
  std::vector<std::vector<int>> points;
  std::vector<double> mu;
  std::vector<double> nu;
};

UnionSupport merge_supports(const PosetSample& mu, const PosetSample& nu) {
  if (mu.points.empty() || nu.points.empty())
    throw std::invalid_argument("dominance check needs nonempty distributions");
  if (mu.points.size() != mu.prob.size() || nu.points.size() != nu.prob.size())
    throw std::invalid_argument("points/probabilities size mismatch");
  const std::size_t dim = mu.points.front().size();
  std::map<std::vector<int>, std::pair<double, double>> acc;
  auto feed = [&](const PosetSample& sample, bool is_mu) {
    double total = 0.0;
    for (std::size_t i = 0; i < sample.points.size(); ++i) {
      if (sample.points[i].size() != dim)
        throw std::invalid_argument("dominance check: mismatched point dimensions");
      if (sample.prob[i] < -1e-12)
        throw std::invalid_argument("dominance check: negative probability");
      auto& slot = acc[sample.points[i]];
      (is_mu ? slot.first : slot.second) += sample.prob[i];
      total += sample.prob[i];
    }
    if (std::abs(total - 1.0) > 1e-6)
      throw std::invalid_argument("dominance check: probabilities must sum to 1");
    return total;
  };
  double mu_total = feed(mu, true);
  double nu_total = feed(nu, false);

  UnionSupport out;
  out.points.reserve(acc.size());
  for (auto& [point, masses] : acc) {
    out.points.push_back(point);
    out.mu.push_back(masses.first / mu_total);
    out.nu.push_back(masses.second / nu_total);
  }
  return out;
}

}  // namespace

std::string to_line(const AuditReport& report) {
  return "AUDIT " + report.name + (report.pass ? " PASS" : " FAIL") +
         " margin=" + fmt(report.margin) + " instance=" + report.instance;
}

DominanceResult stochastic_dominance_check(const PosetSample& mu, const PosetSample& nu) {
  UnionSupport support = merge_supports(mu, nu);
  const std::size_t n = support.points.size();
  if (n > kFlowCap)
    throw std::invalid_argument("dominance check: state space above the flow-oracle cap");

  // Strassen via max-flow: source -> mu points -> (x <= y arcs) -> nu points -> sink.
  const int source = 0, sink = static_cast<int>(2 * n + 1);
  MaxFlow flow(static_cast<int>(2 * n + 2));
  std::vector<std::pair<int, int>> cross;  // (i, j) per cross arc, in edge order
  int edge_count = 0;
  std::vector<int> cross_edge_index;
  for (std::size_t i = 0; i < n; ++i) {
    flow.add_edge(source, static_cast<int>(1 + i), support.mu[i]);
    ++edge_count;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (support.mu[i] <= 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (support.nu[j] <= 0.0 || !leq(support.points[i], support.points[j])) continue;
      flow.add_edge(static_cast<int>(1 + i), static_cast<int>(1 + n + j), 2.0);
      cross.emplace_back(static_cast<int>(i), static_cast<int>(j));
      cross_edge_index.push_back(edge_count++);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    flow.add_edge(static_cast<int>(1 + n + j), sink, support.nu[j]);
    ++edge_count;
  }

  DominanceResult result;
  double max_flow = flow.run(source, sink);
  result.flow_deficit = std::max(0.0, 1.0 - max_flow);
  result.dominated = result.flow_deficit <= kRelSlack;

  // Tightness over principal up-sets U_x = {y >= x}, the whole space excluded.
  result.principal_margin = std::numeric_limits<double>::infinity();
  bool any_principal = false;
  for (std::size_t x = 0; x < n; ++x) {
    double mu_mass = 0.0, nu_mass = 0.0;
    std::size_t members = 0;
    for (std::size_t y = 0; y < n; ++y) {
      if (!leq(support.points[x], support.points[y])) continue;
      ++members;
      mu_mass += support.mu[y];
      nu_mass += support.nu[y];
    }
    if (members == n) continue;  // trivial up-set, equality by normalization
    any_principal = true;
    result.principal_margin = std::min(result.principal_margin, nu_mass - mu_mass);
  }
  if (!any_principal) result.principal_margin = 0.0;

  if (n <= kUpsetCap) {
    result.upset_oracle_ran = true;
    std::vector<std::uint32_t> up_mask(n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (leq(support.points[i], support.points[j])) up_mask[i] |= std::uint32_t{1} << j;
    double proper_min = std::numeric_limits<double>::infinity();
    const std::uint32_t full = (n == 32) ? ~std::uint32_t{0}
                                         : ((std::uint32_t{1} << n) - 1);
    for (std::uint32_t mask = 1; mask < full; ++mask) {
      bool closed = true;
      double gap = 0.0;
      for (std::size_t i = 0; i < n && closed; ++i) {
        if (!((mask >> i) & 1)) continue;
        if ((mask & up_mask[i]) != up_mask[i]) closed = false;
        gap += support.nu[i] - support.mu[i];
      }
      if (closed) proper_min = std::min(proper_min, gap);
    }
    if (!std::isfinite(proper_min)) proper_min = 0.0;
    result.proper_upset_margin = proper_min;
    bool dominated_by_upsets = proper_min >= -kRelSlack;
    if (dominated_by_upsets != result.dominated)
      throw std::logic_error("dominance oracles disagree (flow vs up-set enumeration)");
  }

  if (result.dominated) {
    for (std::size_t c = 0; c < cross.size(); ++c) {
      double f = flow.flow_on(cross_edge_index[c]);
      if (f > 1e-12) result.coupling.emplace_back(cross[c].first, cross[c].second, f);
    }
  }
  result.union_points = std::move(support.points);
  result.margin = result.dominated ? result.principal_margin : -result.flow_deficit;
  return result;
}

// ---------------------------------------------------------------------------
// FKG lattice condition.

AuditReport fkg_lattice_core(int sites, int levels, const std::vector<double>& weight,
                             FkgMode mode, std::string instance) {
  std::size_t profiles = 1;
  for (int j = 0; j < sites; ++j) {
    profiles *= static_cast<std::size_t>(levels);
    if (profiles > 200'000) throw EnumerationCapError("fkg audit: profile space too large");
  }
  if (weight.size() != profiles)
    throw std::invalid_argument("fkg audit: weight table size mismatch");

  std::vector<std::vector<int>> digits(profiles, std::vector<int>(sites));
  for (std::size_t idx = 0; idx < profiles; ++idx) {
    std::size_t rest = idx;
    for (int j = 0; j < sites; ++j) {
      digits[idx][j] = static_cast<int>(rest % levels);
      rest /= levels;
    }
  }
  std::vector<std::size_t> stride(sites);
  std::size_t s = 1;
  for (int j = 0; j < sites; ++j) {
    stride[j] = s;
    s *= levels;
  }

  AuditReport report;
  report.name = "fkg";
  report.instance = std::string(mode == FkgMode::AllPairs ? "mode=all-pairs;"
                                                          : "mode=two-site-pairs;") +
                    instance;
  double worst_rel = std::numeric_limits<double>::infinity();
  double worst_abs = 0.0;
  std::size_t worst_i = 0, worst_j = 0;

  for (std::size_t i = 0; i < profiles; ++i) {
    for (std::size_t j = i; j < profiles; ++j) {
      if (mode == FkgMode::TwoSitePairs) {
        int differing = 0;
        for (int t = 0; t < sites; ++t)
          if (digits[i][t] != digits[j][t]) ++differing;
        if (differing > 2) continue;
      }
      std::size_t join = 0, meet = 0;
      for (int t = 0; t < sites; ++t) {
        join += static_cast<std::size_t>(std::max(digits[i][t], digits[j][t])) * stride[t];
        meet += static_cast<std::size_t>(std::min(digits[i][t], digits[j][t])) * stride[t];
      }
      double lhs = weight[join] * weight[meet];
      double rhs = weight[i] * weight[j];
      double rel = (lhs - rhs) / std::max(rhs, std::numeric_limits<double>::min());
      if (rel < worst_rel) {
        worst_rel = rel;
        worst_abs = lhs - rhs;
        worst_i = i;
        worst_j = j;
      }
    }
  }

  report.pass = worst_rel >= -kRelSlack;
  report.margin = worst_abs;
  if (!report.pass) {
    nlohmann::json ce;
    ce["xi"] = digits[worst_i];
    ce["zeta"] = digits[worst_j];
    ce["weight_xi"] = weight[worst_i];
    ce["weight_zeta"] = weight[worst_j];
    ce["relative_slack"] = worst_rel;
    report.counterexample = ce.dump();
  }
  return report;
}

AuditReport fkg_lattice_audit(const ExactTable& table, FkgMode mode) {
  const Region& region = table.region();
  for (VertexId v : region.boundary())
    if (table.boundary()[v] < 0)
      throw std::invalid_argument("fkg audit needs nonnegative boundary heights");
  if (!table.potential().flat() || !table.potential().base().symmetric())
    throw std::invalid_argument("fkg audit needs a flat symmetric potential");

  std::string instance = "pot=" + table.potential().base().name() +
                         ";beta=" + fmt(table.beta()) + ";m=" + std::to_string(table.m()) +
                         ";sites=" + std::to_string(region.interior_size()) + ";bc=";
  for (VertexId v : region.boundary()) instance += std::to_string(table.boundary()[v]);
  return fkg_lattice_core(region.interior_size(), table.m() + 1, table.abs_law_scaled(), mode,
                          std::move(instance));
}

// ---------------------------------------------------------------------------
// Bernoulli(1/2) domination of the conditioned-nonnegative measure.

BernoulliDominationResult bernoulli_domination_check(const Region& region,
                                                     const std::vector<int>& boundary,
                                                     const PotentialSpec& v, double beta,
                                                     int m) {
  if (!v.lipschitz())
    throw std::invalid_argument("bernoulli domination audit needs a Lipschitz potential");
  const int degree = region.lattice().max_degree();
  ExactTable table = enumerate_measure(region, boundary, v, beta, m);

  const int sites = region.interior_size();
  PosetSample conditioned;
  KahanSum mass;
  for (std::size_t idx = 0; idx < table.size(); ++idx) {
    std::vector<int> point(sites);
    bool nonneg = true;
    for (int j = 0; j < sites; ++j) {
      point[j] = table.height_at(idx, j);
      if (point[j] < 0) nonneg = false;
    }
    if (!nonneg) continue;
    conditioned.points.push_back(std::move(point));
    conditioned.prob.push_back(table.weight(idx));
    mass.add(table.weight(idx));
  }
  for (double& p : conditioned.prob) p /= mass.value();

  PosetSample bernoulli;
  const std::size_t corners = std::size_t{1} << sites;
  for (std::size_t maskv = 0; maskv < corners; ++maskv) {
    std::vector<int> point(sites);
    for (int j = 0; j < sites; ++j) point[j] = static_cast<int>((maskv >> j) & 1);
    bernoulli.points.push_back(std::move(point));
    bernoulli.prob.push_back(1.0 / static_cast<double>(corners));
  }

  BernoulliDominationResult out;
  out.dominance = stochastic_dominance_check(bernoulli, conditioned);

  AuditReport& report = out.report;
  report.name = "bernoulli-domination";
  report.instance = "lat=" + std::string(to_string(region.lattice().kind())) +
                    ";sites=" + std::to_string(sites) + ";pot=" + v.name() +
                    ";beta=" + fmt(beta) + ";m=" + std::to_string(m) + ";bc=";
  for (VertexId b : region.boundary()) report.instance += std::to_string(boundary[b]);
  report.informational = beta > std::log(2.0) / degree * (1.0 + 1e-12);
  if (report.informational) report.instance += ";note=out-of-hypothesis";
  report.pass = out.dominance.dominated;
  report.margin = out.dominance.margin;
  if (!report.pass) {
    nlohmann::json ce;
    ce["lattice"] = to_string(region.lattice().kind());
    ce["potential"] = v.name();
    ce["beta"] = beta;
    ce["m"] = m;
    std::vector<int> bc;
    for (VertexId b : region.boundary()) bc.push_back(boundary[b]);
    ce["boundary"] = bc;
    ce["flow_deficit"] = out.dominance.flow_deficit;
    report.counterexample = ce.dump();
  }
  return out;
}

AuditReport bernoulli_domination_audit(const Region& region, const std::vector<int>& boundary,
                                       const PotentialSpec& v, double beta, int m) {
  return bernoulli_domination_check(region, boundary, v, beta, m).report;
}

// ---------------------------------------------------------------------------
// Two-copy domination conditioned on the zeta field.

TwoCopyDominationResult two_copy_domination_check(const Region& region,
                                                  const std::vector<int>& boundary_a,
                                                  const std::vector<int>& boundary_b,
                                                  const PotentialSpec& v, double beta, int m,
                                                  std::span<const int> cond) {
  if (!v.lipschitz())
    throw std::invalid_argument("two-copy domination audit needs a Lipschitz potential");
  const int sites = region.interior_size();
  if (static_cast<int>(cond.size()) != sites)
    throw std::invalid_argument("conditioning vector must cover the interior");

  ExactTable table_a = enumerate_measure(region, boundary_a, v, beta, m);
  ExactTable table_b = enumerate_measure(region, boundary_b, v, beta, m);

  std::map<std::vector<int>, double> psi_mass;
  KahanSum total;
  double ge2_mass = 0.0;
  std::vector<int> ha(sites), hb(sites), psi(sites);
  for (std::size_t ia = 0; ia < table_a.size(); ++ia) {
    for (int j = 0; j < sites; ++j) ha[j] = table_a.height_at(ia, j);
    for (std::size_t ib = 0; ib < table_b.size(); ++ib) {
      bool match = true;
      for (int j = 0; j < sites && match; ++j) {
        hb[j] = table_b.height_at(ib, j);
        int zeta = ha[j] < hb[j] ? ha[j] + 1 : (ha[j] == hb[j] ? ha[j] : kZetaInfinity);
        if (zeta != cond[j]) match = false;
      }
      if (!match) continue;
      bool all_ge2 = true;
      for (int j = 0; j < sites; ++j) {
        psi[j] = hb[j] - ha[j];
        if (psi[j] < 2) all_ge2 = false;
        // zeta case table: either phi = phi' = zeta, or phi = zeta - 1 < phi'
        bool equal_case = ha[j] == cond[j] && hb[j] == cond[j];
        bool below_case = ha[j] == cond[j] - 1 && hb[j] > ha[j];
        if (!equal_case && !below_case)
          throw std::logic_error("zeta conditioning admitted an inconsistent pair");
      }
      double w = table_a.weight(ia) * table_b.weight(ib);
      psi_mass[psi] += w;
      total.add(w);
      if (all_ge2) ge2_mass += w;
    }
  }
  if (!(total.value() > 0.0))
    throw std::invalid_argument("conditioning event has zero mass");

  PosetSample psi_law;
  for (auto& [point, mass] : psi_mass) {
    psi_law.points.push_back(point);
    psi_law.prob.push_back(mass / total.value());
  }

  PosetSample doubled;
  const std::size_t corners = std::size_t{1} << sites;
  for (std::size_t maskv = 0; maskv < corners; ++maskv) {
    std::vector<int> point(sites);
    for (int j = 0; j < sites; ++j) point[j] = 2 * static_cast<int>((maskv >> j) & 1);
    doubled.points.push_back(std::move(point));
    doubled.prob.push_back(1.0 / static_cast<double>(corners));
  }

  TwoCopyDominationResult out;
  out.p_psi_ge2 = ge2_mass / total.value();
  out.dominance = stochastic_dominance_check(doubled, psi_law);

  AuditReport& report = out.report;
  report.name = "two-copy-domination";
  report.instance = "lat=" + std::string(to_string(region.lattice().kind())) +
                    ";sites=" + std::to_string(sites) + ";pot=" + v.name() +
                    ";beta=" + fmt(beta) + ";m=" + std::to_string(m) +
                    ";p_ge2=" + fmt(out.p_psi_ge2);
  const int degree = region.lattice().max_degree();
  report.informational = beta > std::log(2.0) / (2.0 * degree) * (1.0 + 1e-12);
  if (report.informational) report.instance += ";note=out-of-hypothesis";
  report.pass = out.dominance.dominated;
  report.margin = out.dominance.margin;
  if (!report.pass) {
    nlohmann::json ce;
    ce["lattice"] = to_string(region.lattice().kind());
    ce["potential"] = v.name();
    ce["beta"] = beta;
    ce["m"] = m;
    std::vector<int> ba, bb;
    for (VertexId x : region.boundary()) {
      ba.push_back(boundary_a[x]);
      bb.push_back(boundary_b[x]);
    }
    ce["boundary_a"] = ba;
    ce["boundary_b"] = bb;
    ce["cond"] = std::vector<int>(cond.begin(), cond.end());
    ce["flow_deficit"] = out.dominance.flow_deficit;
    report.counterexample = ce.dump();
  }
  return out;
}

AuditReport two_copy_domination_audit(const Region& region, const std::vector<int>& boundary_a,
                                      const std::vector<int>& boundary_b,
                                      const PotentialSpec& v, double beta, int m,
                                      std::span<const int> cond) {
  return two_copy_domination_check(region, boundary_a, boundary_b, v, beta, m, cond).report;
}

// ---------------------------------------------------------------------------
// Volume monotonicity along nested regions.

AuditReport volume_monotonicity_audit(std::span<const Region> chain, const PotentialSpec& v,
                                      double beta, int m) {
  if (chain.size() < 2)
    throw std::invalid_argument("volume monotonicity needs at least two nested regions");
  if (!v.symmetric() || !v.abs_fkg())
    throw std::invalid_argument("volume monotonicity needs a symmetric |.|-FKG potential");
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    if (chain[i].lattice_ptr() != chain[i + 1].lattice_ptr())
      throw std::invalid_argument("volume chain must live on one lattice");
    for (VertexId x : chain[i].interior())
      if (!chain[i + 1].in_interior(x))
        throw std::invalid_argument("volume chain must be nested");
  }
  const VertexId root = chain.front().lattice().root();
  if (!chain.front().in_interior(root))
    throw std::invalid_argument("volume chain must contain the root");

  std::vector<ExactTable> tables;
  std::vector<double> moments;
  for (const Region& region : chain) {
    std::vector<int> zero(region.lattice().size(), 0);
    tables.push_back(enumerate_measure(region, zero, v, beta, m));
    moments.push_back(site_marginal(tables.back(), root).second_moment);
  }

  auto abs_sample = [&](const ExactTable& table, const Region& onto) {
    const Region& from = table.region();
    std::vector<int> position(onto.interior_size());
    for (int j = 0; j < onto.interior_size(); ++j)
      position[j] = from.interior_index(onto.interior()[j]);
    std::vector<double> law = table.abs_law_scaled();
    std::map<std::vector<int>, double> marginal;
    const int levels = table.m() + 1;
    std::vector<int> digit(from.interior_size());
    for (std::size_t idx = 0; idx < law.size(); ++idx) {
      std::size_t rest = idx;
      for (int j = 0; j < from.interior_size(); ++j) {
        digit[j] = static_cast<int>(rest % levels);
        rest /= levels;
      }
      std::vector<int> point(onto.interior_size());
      for (int j = 0; j < onto.interior_size(); ++j) point[j] = digit[position[j]];
      marginal[point] += law[idx];
    }
    PosetSample sample;
    KahanSum total;
    for (auto& [point, mass] : marginal) total.add(mass);
    for (auto& [point, mass] : marginal) {
      sample.points.push_back(point);
      sample.prob.push_back(mass / total.value());
    }
    return sample;
  };

  AuditReport report;
  report.name = "volume-monotonicity";
  report.instance = "lat=" + std::string(to_string(chain.front().lattice().kind())) +
                    ";pot=" + v.name() + ";beta=" + fmt(beta) + ";m=" + std::to_string(m) +
                    ";sizes=";
  for (std::size_t i = 0; i < chain.size(); ++i)
    report.instance +=
        (i ? "+" : "") + std::to_string(chain[i].interior_size());

  double margin = std::numeric_limits<double>::infinity();
  bool pass = true;
  std::string failure;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    PosetSample smaller = abs_sample(tables[i], chain[i]);
    PosetSample larger = abs_sample(tables[i + 1], chain[i]);
    DominanceResult dom = stochastic_dominance_check(smaller, larger);
    margin = std::min(margin, dom.margin);
    if (!dom.dominated) {
      pass = false;
      failure = "abs-law domination fails at step " + std::to_string(i);
    }
    double moment_gap = moments[i + 1] - moments[i];
    margin = std::min(margin, moment_gap);
    if (moment_gap < -1e-10) {
      pass = false;
      failure = "root second moment decreases at step " + std::to_string(i);
    }
  }
  report.pass = pass;
  report.margin = margin;
  if (!pass) {
    nlohmann::json ce;
    ce["lattice"] = to_string(chain.front().lattice().kind());
    ce["potential"] = v.name();
    ce["beta"] = beta;
    ce["m"] = m;
    ce["moments"] = moments;
    ce["failure"] = failure;
    nlohmann::json regions = nlohmann::json::array();
    for (const Region& region : chain) {
      nlohmann::json coords = nlohmann::json::array();
      for (VertexId x : region.interior()) {
        Coord c = region.lattice().coord(x);
        coords.push_back({c.x, c.y});
      }
      regions.push_back(coords);
    }
    ce["regions"] = regions;
    report.counterexample = ce.dump();
  }
  return report;
}

// ---------------------------------------------------------------------------
// GKS inequalities for one coupling draw.

AuditReport gks_audit(const Region& region, const EdgeCouplings& k, const EdgeCouplings& h,
                      const EdgeCouplings& hp) {
  const int sites = region.interior_size();
  if (sites > 12) throw EnumerationCapError("gks audit caps at 12 sites");
  const std::size_t edge_count = region.edges().size();
  if (k.k.size() != edge_count || h.k.size() != edge_count || hp.k.size() != edge_count)
    throw std::invalid_argument("gks audit: coupling vectors must match the edge list");
  for (std::size_t e = 0; e < edge_count; ++e)
    if (k.k[e] < 0 || h.k[e] < 0 || hp.k[e] < 0)
      throw std::invalid_argument("gks audit needs nonnegative couplings and fields");

  // One enumeration accumulates <sigma_S> for every S simultaneously.
  const std::size_t subsets = std::size_t{1} << sites;
  std::vector<KahanSum> acc(subsets);
  KahanSum z;
  struct SpinEdge {
    int upos, vpos;
    double k;
  };
  std::vector<SpinEdge> edges;
  double shift = 0.0;
  for (std::size_t e = 0; e < edge_count; ++e) {
    const Edge& edge = region.edges()[e];
    edges.push_back(
        {region.interior_index(edge.u), region.interior_index(edge.v), k.k[e]});
    shift += std::abs(k.k[e]);
  }
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    double energy = 0.0;
    for (const SpinEdge& e : edges) {
      int su = e.upos >= 0 ? 1 - 2 * static_cast<int>((mask >> e.upos) & 1) : 1;
      int sv = e.vpos >= 0 ? 1 - 2 * static_cast<int>((mask >> e.vpos) & 1) : 1;
      energy += su * sv * e.k;
    }
    double w = std::exp(energy - shift);
    z.add(w);
    for (std::size_t s = 0; s < subsets; ++s) {
      int parity = std::popcount(mask & s) & 1;
      acc[s].add(parity ? -w : w);
    }
  }
  std::vector<double> corr(subsets);
  for (std::size_t s = 0; s < subsets; ++s) corr[s] = acc[s].value() / z.value();

  double worst = std::numeric_limits<double>::infinity();
  std::string worst_kind;
  auto track = [&](double slack, const std::string& kind) {
    if (slack < worst) {
      worst = slack;
      worst_kind = kind;
    }
  };
  for (std::size_t a = 0; a < subsets; ++a) track(corr[a], "first;A=" + std::to_string(a));
  for (std::size_t a = 0; a < subsets; ++a)
    for (std::size_t b = 0; b < subsets; ++b)
      track(corr[a ^ b] - corr[a] * corr[b],
            "second;A=" + std::to_string(a) + ";B=" + std::to_string(b));

  // Exponential forms via partition ratios.
  auto add_fields = [&](const EdgeCouplings& base, const EdgeCouplings& extra1,
                        const EdgeCouplings* extra2) {
    EdgeCouplings sum = base;
    for (std::size_t e = 0; e < edge_count; ++e) {
      sum.k[e] += extra1.k[e];
      if (extra2) sum.k[e] += extra2->k[e];
    }
    return sum;
  };
  double log_zk = ising_log_partition_plus(region, k);
  double log_h = ising_log_partition_plus(region, add_fields(k, h, nullptr)) - log_zk;
  double log_hp = ising_log_partition_plus(region, add_fields(k, hp, nullptr)) - log_zk;
  double log_both = ising_log_partition_plus(region, add_fields(k, h, &hp)) - log_zk;
  // <exp(sum sigma H)> >= 1  <=>  log ratio >= 0
  track(log_h, "exp-first;H");
  track(log_hp, "exp-first;Hp");
  // <exp(sum sigma (H+Hp))> >= <exp(sum sigma H)> <exp(sum sigma Hp)>
  track(log_both - log_h - log_hp, "exp-second");

  AuditReport report;
  report.name = "gks";
  report.instance = "lat=" + std::string(to_string(region.lattice().kind())) +
                    ";sites=" + std::to_string(sites) +
                    ";edges=" + std::to_string(edge_count);
  report.pass = worst >= -kRelSlack;
  report.margin = worst;
  if (!report.pass) {
    nlohmann::json ce;
    ce["k"] = k.k;
    ce["h"] = h.k;
    ce["hp"] = hp.k;
    ce["worst"] = worst_kind;
    report.counterexample = ce.dump();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Randomized oracle agreement.

AuditReport dominance_oracle_agreement(int trials, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  AuditReport report;
  report.name = "dominance-oracle-agreement";
  report.instance = "trials=" + std::to_string(trials);
  double max_gap = 0.0;
  int dominated_count = 0;
  for (int t = 0; t < trials; ++t) {
    int dim = 1 + static_cast<int>(rng.next_below(3));
    int space = 1;
    for (int d = 0; d < dim; ++d) space *= 4;
    int max_count = std::min(20, space);  // union stays <= 20 and is reachable
    int count = 2 + static_cast<int>(rng.next_below(max_count - 1));
    std::map<std::vector<int>, char> cloud;
    while (static_cast<int>(cloud.size()) < count) {
      std::vector<int> point(dim);
      for (int d = 0; d < dim; ++d) point[d] = static_cast<int>(rng.next_below(4));
      cloud[point] = 1;
    }
    auto draw = [&](PosetSample& sample) {
      double total = 0.0;
      for (const auto& [point, unused] : cloud) {
        (void)unused;
        double w = rng.next_double();
        if (w < 0.15) w = 0.0;  // sprinkle zero-mass points
        sample.points.push_back(point);
        sample.prob.push_back(w);
        total += w;
      }
      if (total == 0.0) {
        sample.prob[0] = 1.0;
        total = 1.0;
      }
      for (double& p : sample.prob) p /= total;
    };
    PosetSample mu, nu;
    draw(mu);
    draw(nu);
    DominanceResult result = stochastic_dominance_check(mu, nu);  // throws on disagreement
    if (result.dominated) ++dominated_count;
    if (result.upset_oracle_ran) {
      double gap = std::abs(result.flow_deficit -
                            std::max(0.0, -result.proper_upset_margin));
      max_gap = std::max(max_gap, gap);
    }
  }
  report.pass = true;
  report.margin = -max_gap;
  report.instance += ";dominated=" + std::to_string(dominated_count);
  return report;
}

}  // namespace heightlab
