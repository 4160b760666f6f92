#include "heightlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "heightlab/errors.hpp"
#include "heightlab/gibbs.hpp"
#include "heightlab/ising.hpp"
#include "heightlab/kahan.hpp"
#include "heightlab/rng.hpp"
#include "heightlab/sampler.hpp"
#include "heightlab/version.hpp"

namespace heightlab {

namespace {

constexpr std::uint64_t kStreamsPerCell = 4096;
constexpr int kMaxAdaptiveM = 512;

std::string fmt(double x, const char* spec = "%.12g") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, x);
  return buf;
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

long parse_long(const std::string& key, const std::string& value) {
  char* end = nullptr;
  long v = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') throw ConfigError(key, "expected an integer");
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') throw ConfigError(key, "expected a number");
  return v;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const std::set<std::string> kMcKinds = {"variance-growth", "two-copy", "contour-stats"};
const std::set<std::string> kAuditKinds = {"fkg-audit", "gks-audit", "decomposition-audit",
                                           "domination-audit"};

PotentialSpec resolve_potential(const std::string& name, int window) {
  if (name == "sos") return PotentialSpec::sos(window);
  if (name == "dgauss") return PotentialSpec::discrete_gaussian(window);
  if (name.rfind("file:", 0) == 0)
    return PotentialSpec::from_table_file(name.substr(5), window);
  throw ConfigError("potential", "expected sos, dgauss or file:<path>");
}

void validate_config(const ExperimentConfig& cfg) {
  if (!kMcKinds.count(cfg.kind) && !kAuditKinds.count(cfg.kind))
    throw ConfigError("kind", "unknown experiment kind '" + cfg.kind + "'");
  if (cfg.output.empty()) throw ConfigError("output", "must not be empty");
  if (cfg.threads < 0) throw ConfigError("threads", "must be >= 0");
  if (kAuditKinds.count(cfg.kind)) {
    if (cfg.size != "small" && cfg.size != "full")
      throw ConfigError("size", "expected small or full");
    return;
  }
  if (cfg.radii.empty()) throw ConfigError("radii", "at least one radius is required");
  for (int n : cfg.radii)
    if (n < 0) throw ConfigError("radii", "radii must be >= 0");
  if (cfg.betas.empty()) throw ConfigError("betas", "at least one beta is required");
  for (double b : cfg.betas)
    if (!(b >= 0.0)) throw ConfigError("betas", "betas must be >= 0");
  if (cfg.m < 0) throw ConfigError("m", "must be >= 0 (0 = adaptive)");
  if (cfg.batches < 2) throw ConfigError("batches", "need at least 2 batches");
  if (cfg.sweeps < cfg.batches)
    throw ConfigError("sweeps", "need at least one sweep per batch");
  if (cfg.burnin < 0) throw ConfigError("burnin", "must be >= 0");
  if (cfg.chains < 1) throw ConfigError("chains", "must be >= 1");
  if (cfg.chains > 256) throw ConfigError("chains", "must be <= 256");
  if (cfg.cluster_every < 0) throw ConfigError("cluster_every", "must be >= 0");
  if (cfg.kind == "contour-stats" && cfg.levels.empty())
    throw ConfigError("levels", "at least one level is required");

  // Resolve once so a broken potential spec fails before any computation.
  try {
    PotentialSpec pot = resolve_potential(cfg.potential, 64);
    if (cfg.cluster_every > 0 && !pot.symmetric())
      throw ConfigError(
          "cluster_every",
          "the sign cluster move needs a symmetric potential; set cluster_every=0");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("potential", e.what());
  }
}

ExperimentConfig apply_entry(ExperimentConfig cfg, const std::string& key,
                             const std::string& value) {
  if (key == "kind") {
    cfg.kind = value;
  } else if (key == "lattice") {
    try {
      cfg.lattice = lattice_kind_from_string(value);
    } catch (const std::invalid_argument&) {
      throw ConfigError("lattice", "expected square, triangular or hexagonal");
    }
  } else if (key == "radii") {
    cfg.radii.clear();
    for (const auto& item : split_list(value))
      cfg.radii.push_back(static_cast<int>(parse_long(key, item)));
  } else if (key == "betas") {
    cfg.betas.clear();
    for (const auto& item : split_list(value)) cfg.betas.push_back(parse_double(key, item));
  } else if (key == "potential") {
    cfg.potential = value;
  } else if (key == "m") {
    cfg.m = static_cast<int>(parse_long(key, value));
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
  } else if (key == "sweeps") {
    cfg.sweeps = parse_long(key, value);
  } else if (key == "burnin") {
    cfg.burnin = parse_long(key, value);
  } else if (key == "batches") {
    cfg.batches = static_cast<int>(parse_long(key, value));
  } else if (key == "chains") {
    cfg.chains = static_cast<int>(parse_long(key, value));
  } else if (key == "levels") {
    cfg.levels.clear();
    for (const auto& item : split_list(value))
      cfg.levels.push_back(static_cast<int>(parse_long(key, item)));
  } else if (key == "cluster_every") {
    cfg.cluster_every = static_cast<int>(parse_long(key, value));
  } else if (key == "size") {
    cfg.size = value;
  } else if (key == "output") {
    cfg.output = value;
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(parse_long(key, value));
  } else {
    throw ConfigError(key, "unknown key");
  }
  return cfg;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "missing key");
    cfg = apply_entry(std::move(cfg), key, value);
  }
  if (cfg.kind.empty()) throw ConfigError("kind", "is required");
  validate_config(cfg);
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

int effective_threads(int requested) {
  int base = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (base < 1) base = 1;
  if (const char* env = std::getenv("HEIGHTLAB_THREADS")) {
    char* end = nullptr;
    long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) base = std::min<long>(base, cap);
  }
  return base;
}

// ---------------------------------------------------------------------------
// Shared helpers for suites and experiments.

namespace {

Region coords_region(const LatticePtr& lattice, const std::vector<Coord>& coords) {
  std::vector<VertexId> ids;
  for (Coord c : coords) {
    VertexId v = lattice->find(c);
    if (v < 0) throw std::invalid_argument("region coordinate outside the lattice window");
    ids.push_back(v);
  }
  return Region::make(lattice, std::move(ids));
}

std::vector<int> random_boundary(const Region& region, CounterRng& rng, int lo, int hi) {
  std::vector<int> bc(region.lattice().size(), 0);
  for (VertexId v : region.boundary())
    bc[v] = lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  return bc;
}

EdgeCouplings random_couplings(const Region& region, CounterRng& rng, double scale) {
  EdgeCouplings k;
  k.k.reserve(region.edges().size());
  for (std::size_t e = 0; e < region.edges().size(); ++e)
    k.k.push_back(scale * rng.next_double());
  return k;
}

struct NamedRegion {
  std::string name;
  std::vector<Coord> coords;
};

const std::vector<NamedRegion>& small_square_regions() {
  static const std::vector<NamedRegion> regions = {
      {"site", {{0, 0}}},
      {"domino", {{0, 0}, {1, 0}}},
      {"l-tromino", {{0, 0}, {1, 0}, {0, 1}}},
      {"block2x2", {{0, 0}, {1, 0}, {0, 1}, {1, 1}}},
  };
  return regions;
}

}  // namespace

// ---------------------------------------------------------------------------
// Audit suites.

std::vector<AuditReport> fkg_suite(const SuiteOptions& opts) {
  std::vector<AuditReport> reports;
  auto lattice = PlanarLattice::build(LatticeKind::Square, 4);
  Region pair = coords_region(lattice, {{0, 0}, {1, 0}});
  Region block = coords_region(lattice, {{0, 0}, {1, 0}, {0, 1}, {1, 1}});

  std::vector<double> betas = opts.full ? std::vector<double>{0.25, 1.0, 2.0}
                                        : std::vector<double>{1.0};
  std::vector<int> bc_values = opts.full ? std::vector<int>{0, 1} : std::vector<int>{0};
  for (const char* pot_name : {"sos", "dgauss"}) {
    PotentialSpec pot = resolve_potential(pot_name, 64);
    for (double beta : betas) {
      for (int bc_value : bc_values) {
        std::vector<int> bc = uniform_heights(*lattice, bc_value);
        ExactTable pair_table = enumerate_measure(pair, bc, pot, beta, 2);
        reports.push_back(fkg_lattice_audit(pair_table, FkgMode::AllPairs));
        ExactTable block_table = enumerate_measure(block, bc, pot, beta, 2);
        reports.push_back(fkg_lattice_audit(block_table, FkgMode::TwoSitePairs));
      }
    }
  }
  return reports;
}

std::vector<AuditReport> gks_suite(const SuiteOptions& opts) {
  std::vector<AuditReport> reports;
  auto lattice = PlanarLattice::build(LatticeKind::Square, 4);
  CounterRng rng(opts.seed, 7);
  int draws = opts.full ? 50 : 10;
  for (const NamedRegion& named : small_square_regions()) {
    Region region = coords_region(lattice, named.coords);
    for (int d = 0; d < draws; ++d) {
      EdgeCouplings k = random_couplings(region, rng, 1.5);
      EdgeCouplings h = random_couplings(region, rng, 1.0);
      EdgeCouplings hp = random_couplings(region, rng, 1.0);
      AuditReport report = gks_audit(region, k, h, hp);
      report.instance += ";region=" + named.name + ";draw=" + std::to_string(d);
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

std::vector<AuditReport> decomposition_suite(const SuiteOptions& opts) {
  std::vector<AuditReport> reports;
  auto lattice = PlanarLattice::build(LatticeKind::Square, 4);
  CounterRng rng(opts.seed, 11);
  const int m = 3;
  std::vector<double> betas = opts.full ? std::vector<double>{0.25, 1.0, 2.0}
                                        : std::vector<double>{1.0};
  int random_draws = opts.full ? 3 : 1;

  std::vector<NamedRegion> regions = {
      {"site", {{0, 0}}},
      {"domino", {{0, 0}, {1, 0}}},
      {"l-tromino", {{0, 0}, {1, 0}, {0, 1}}},
  };
  if (opts.full) regions.push_back({"i-tromino", {{0, 0}, {1, 0}, {2, 0}}});

  for (const NamedRegion& named : regions) {
    Region region = coords_region(lattice, named.coords);
    for (const char* pot_name : {"sos", "dgauss"}) {
      PotentialSpec pot = resolve_potential(pot_name, 64);
      for (double beta : betas) {
        std::vector<std::vector<int>> boundaries = {uniform_heights(*lattice, 0)};
        for (int d = 0; d < random_draws; ++d)
          boundaries.push_back(random_boundary(region, rng, 0, 2));
        for (const auto& bc : boundaries) {
          ExactTable table = enumerate_measure(region, bc, pot, beta, m);
          std::vector<double> abs_law = table.abs_law_scaled();

          const int sites = region.interior_size();
          double worst_rel = 0.0;
          KahanSum total;
          std::vector<int> xi(lattice->size(), 0);
          for (VertexId v : region.boundary()) xi[v] = std::abs(bc[v]);
          for (std::size_t idx = 0; idx < abs_law.size(); ++idx) {
            std::size_t rest = idx;
            for (int j = 0; j < sites; ++j) {
              xi[region.interior()[j]] = static_cast<int>(rest % (m + 1));
              rest /= (m + 1);
            }
            AbsHeightProfile profile = AbsHeightProfile::make(region, xi);
            double log_dec = log_decomposition_weight(profile, pot, beta);
            double log_tab = std::log(abs_law[idx]) + table.log_shift();
            worst_rel = std::max(worst_rel, std::abs(std::expm1(log_dec - log_tab)));
            total.add(std::exp(log_dec - table.log_z()));
          }
          double sum_rel = std::abs(total.value() - 1.0);

          AuditReport report;
          report.name = "decomposition";
          report.instance = "region=" + named.name + ";pot=" + std::string(pot_name) +
                            ";beta=" + fmt(beta, "%.6g") + ";m=" + std::to_string(m) + ";bc=";
          for (VertexId v : region.boundary()) report.instance += std::to_string(bc[v]);
          double worst = std::max(worst_rel, sum_rel);
          report.pass = worst <= 1e-10;
          report.margin = -worst;
          if (!report.pass) {
            nlohmann::json ce;
            ce["region"] = named.name;
            ce["potential"] = pot_name;
            ce["beta"] = beta;
            ce["worst_profile_rel"] = worst_rel;
            ce["sum_rel"] = sum_rel;
            report.counterexample = ce.dump();
          }
          reports.push_back(std::move(report));
        }
      }
    }
  }
  return reports;
}

std::vector<AuditReport> domination_suite(const SuiteOptions& opts) {
  std::vector<AuditReport> reports;
  CounterRng rng(opts.seed, 13);
  int draws = opts.full ? 100 : 5;
  int two_copy_draws = opts.full ? 50 : 5;

  for (LatticeKind kind : {LatticeKind::Square, LatticeKind::Hexagonal}) {
    auto lattice = PlanarLattice::build(kind, 4);
    const int degree = lattice->max_degree();
    std::vector<Region> regions;
    regions.push_back(Region::make(lattice, {lattice->root()}));
    regions.push_back(
        Region::make(lattice, {lattice->root(), lattice->neighbours(lattice->root())[0]}));

    // Lemma-style Bernoulli domination at beta = log(2)/degree, M = 40.
    PotentialSpec sos = PotentialSpec::sos(100);
    double beta = std::log(2.0) / degree;
    for (const Region& region : regions) {
      for (int d = 0; d < draws; ++d) {
        std::vector<int> bc = d == 0 ? uniform_heights(*lattice, 0)
                                     : random_boundary(region, rng, 0, 2);
        AuditReport report = bernoulli_domination_audit(region, bc, sos, beta, 40);
        report.instance += ";draw=" + std::to_string(d);
        reports.push_back(std::move(report));
      }
    }

    // Two-copy domination at beta = log(2)/(2 degree), single site, M = 100.
    double beta2 = std::log(2.0) / (2.0 * degree);
    PotentialSpec sos_wide = PotentialSpec::sos(200);
    const Region& site = regions.front();
    std::vector<int> cond = {0};
    for (int d = 0; d < two_copy_draws; ++d) {
      std::vector<int> bc_a = d == 0 ? uniform_heights(*lattice, 0)
                                     : random_boundary(site, rng, 0, 2);
      std::vector<int> bc_b = d == 0 ? uniform_heights(*lattice, 0)
                                     : random_boundary(site, rng, 0, 2);
      AuditReport report =
          two_copy_domination_audit(site, bc_a, bc_b, sos_wide, beta2, 100, cond);
      report.instance += ";draw=" + std::to_string(d);
      reports.push_back(std::move(report));
    }
  }

  // Volume monotonicity along a nested square chain.
  {
    auto lattice = PlanarLattice::build(LatticeKind::Square, 4);
    std::vector<Region> chain = {
        coords_region(lattice, {{0, 0}}),
        coords_region(lattice, {{0, 0}, {1, 0}}),
        coords_region(lattice, {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}}),
    };
    std::vector<double> betas = opts.full ? std::vector<double>{0.5, 1.0, 2.0}
                                          : std::vector<double>{1.0};
    for (const char* pot_name : {"sos", "dgauss"}) {
      PotentialSpec pot = resolve_potential(pot_name, 64);
      for (double beta : betas)
        reports.push_back(volume_monotonicity_audit(chain, pot, beta, 3));
    }
  }

  reports.push_back(dominance_oracle_agreement(opts.full ? 200 : 50, opts.seed));
  return reports;
}

// ---------------------------------------------------------------------------
// Monte Carlo experiments.

namespace {

struct CsvDocument {
  std::string header;
  std::vector<std::string> rows;
};

void write_csv(const std::string& path, const CsvDocument& doc, double wall_seconds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write output file: " + path);
  out << doc.header << "\n";
  for (const std::string& row : doc.rows) out << row << "\n";
  out << "# heightlab " << kVersion << " wall_seconds=" << fmt(wall_seconds, "%.3f") << "\n";
}

struct McCell {
  int n = 0;
  double beta = 0.0;
  int level = 0;
  std::size_t index = 0;
};

int adaptive_m(const Region& region, const std::string& potential, double beta,
               const ExperimentConfig& cfg, std::uint64_t stream_base) {
  int m = 4;
  while (m < kMaxAdaptiveM) {
    PotentialSpec pot = resolve_potential(potential, std::max(64, 2 * m + 2));
    McConfig pilot;
    pilot.seed = cfg.seed;
    pilot.stream = stream_base;
    pilot.burnin = 200;
    pilot.batches = 8;
    pilot.sweeps_per_batch = 25;
    pilot.cluster_every = cfg.cluster_every;
    ChainStats stats =
        run_chain(region, uniform_heights(region.lattice(), 0), pot, beta, m, pilot);
    if (stats.max_abs_height <= m / 2) return m;
    m *= 2;
  }
  return kMaxAdaptiveM;
}

struct MergedStats {
  double value = 0.0;
  double stderr_of_mean = 0.0;
};

MergedStats merge(const std::vector<double>& values, const std::vector<double>& errors) {
  MergedStats out;
  KahanSum sum, var;
  for (double v : values) sum.add(v);
  out.value = sum.value() / static_cast<double>(values.size());
  for (double e : errors) var.add(e * e);
  out.stderr_of_mean = std::sqrt(var.value()) / static_cast<double>(errors.size());
  return out;
}

// One (n, beta[, level], chain) unit; returns the per-chain metric vector for
// its experiment kind.
std::vector<double> run_mc_unit(const ExperimentConfig& cfg, const McCell& cell, int m,
                                int chain) {
  BuiltLattice built = build_lattice(cfg.lattice, cell.n);
  std::vector<int> zero = uniform_heights(*built.lattice, 0);
  PotentialSpec pot = resolve_potential(cfg.potential, std::max(64, 2 * m + 2));

  McConfig mc;
  mc.seed = cfg.seed;
  mc.stream = cell.index * kStreamsPerCell + static_cast<std::uint64_t>(chain);
  mc.burnin = cfg.burnin;
  mc.batches = cfg.batches;
  mc.sweeps_per_batch = std::max<long>(1, cfg.sweeps / cfg.batches);
  mc.cluster_every = cfg.cluster_every;

  if (cfg.kind == "variance-growth") {
    ChainStats stats = run_chain(built.region, zero, pot, cell.beta, m, mc);
    return {stats.second_moment, stats.second_moment_stderr, stats.truncation_fraction};
  }
  if (cfg.kind == "two-copy") {
    Region window = ball_region(built.lattice, cell.n + 1);
    TwoCopyConfig tc;
    tc.mc = mc;
    TwoCopyStats stats = two_copy_run(built.region, window, zero, pot, cell.beta, m, tc);
    return {stats.psi_mean,   stats.psi_stderr,         stats.p_psi_nonneg,
            stats.p_psi_nonneg_stderr, stats.p_surround, stats.p_surround_stderr,
            stats.truncation_fraction};
  }
  Region window = ball_region(built.lattice, cell.n + 1);
  ContourStats stats =
      run_contour_chain(built.region, window, zero, pot, cell.beta, m, mc, cell.level);
  return {stats.p_surround, stats.p_surround_stderr, stats.chain.truncation_fraction};
}

std::string merge_mc_row(const ExperimentConfig& cfg, const McCell& cell, int m,
                         const std::vector<std::vector<double>>& chains) {
  // metric layout: pairs of (value, stderr) followed by a truncation fraction
  const std::size_t width = chains.front().size();
  std::vector<MergedStats> merged;
  for (std::size_t col = 0; col + 1 < width; col += 2) {
    std::vector<double> values, errors;
    for (const auto& chain : chains) {
      values.push_back(chain[col]);
      errors.push_back(chain[col + 1]);
    }
    merged.push_back(merge(values, errors));
  }
  double truncation = 0.0;
  for (const auto& chain : chains) truncation = std::max(truncation, chain.back());

  long total_sweeps = std::max<long>(1, cfg.sweeps / cfg.batches) * cfg.batches *
                      cfg.chains;
  std::string row = std::string(to_string(cfg.lattice)) + "," + std::to_string(cell.n) +
                    "," + fmt(cell.beta, "%.10g") + ",";
  if (cfg.kind == "contour-stats") row += std::to_string(cell.level) + ",";
  row += std::to_string(m) + "," + std::to_string(cfg.seed) + "," +
         std::to_string(total_sweeps);
  for (const MergedStats& stat : merged)
    row += "," + fmt(stat.value) + "," + fmt(stat.stderr_of_mean);
  row += "," + fmt(truncation);
  return row;
}

void parallel_for(std::size_t jobs, int workers, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string error_message;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < jobs; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        failed = true;
        if (error_message.empty()) error_message = e.what();
      }
    }
  };
  if (workers <= 1 || jobs <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    int count = std::min<int>(workers, static_cast<int>(jobs));
    pool.reserve(count);
    for (int w = 0; w < count; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failed) throw std::runtime_error(error_message);
}

int run_mc_experiment(const ExperimentConfig& cfg, CsvDocument& doc) {
  if (cfg.kind == "variance-growth") {
    doc.header = "lattice,n,beta,M,seed,sweeps,second_moment,stderr,truncation_mass";
  } else if (cfg.kind == "two-copy") {
    doc.header =
        "lattice,n,beta,M,seed,sweeps,psi_mean,psi_stderr,p_psi_nonneg,"
        "p_psi_nonneg_stderr,p_surround,p_surround_stderr,truncation_mass";
  } else {
    doc.header = "lattice,n,beta,level,M,seed,sweeps,p_surround,stderr,truncation_mass";
  }

  std::vector<int> radii = cfg.radii;
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  std::vector<double> betas = cfg.betas;
  std::sort(betas.begin(), betas.end());
  betas.erase(std::unique(betas.begin(), betas.end()), betas.end());
  std::vector<int> levels = cfg.kind == "contour-stats" ? cfg.levels : std::vector<int>{0};
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::vector<McCell> cells;
  for (int n : radii)
    for (double beta : betas)
      for (int level : levels) cells.push_back({n, beta, level, cells.size()});

  const int workers = effective_threads(cfg.threads);

  // Pin each cell's truncation window before any chain runs, so all chains of
  // a cell sample the same model.
  std::vector<int> cell_m(cells.size(), cfg.m);
  if (cfg.m == 0) {
    parallel_for(cells.size(), workers, [&](std::size_t i) {
      BuiltLattice built = build_lattice(cfg.lattice, cells[i].n);
      cell_m[i] = adaptive_m(built.region, cfg.potential, cells[i].beta, cfg,
                             cells[i].index * kStreamsPerCell + 2048);
    });
  }

  // (n, beta, chain) units run in parallel; merging is by chain index.
  std::vector<std::vector<std::vector<double>>> metrics(
      cells.size(), std::vector<std::vector<double>>(cfg.chains));
  parallel_for(cells.size() * static_cast<std::size_t>(cfg.chains), workers,
               [&](std::size_t job) {
                 std::size_t c = job / cfg.chains;
                 int chain = static_cast<int>(job % cfg.chains);
                 metrics[c][chain] = run_mc_unit(cfg, cells[c], cell_m[c], chain);
               });

  doc.rows.clear();
  for (std::size_t c = 0; c < cells.size(); ++c)
    doc.rows.push_back(merge_mc_row(cfg, cells[c], cell_m[c], metrics[c]));
  return 0;
}

std::vector<AuditReport> run_suite_for(const ExperimentConfig& cfg) {
  SuiteOptions opts;
  opts.full = cfg.size == "full";
  opts.seed = cfg.seed;
  if (cfg.kind == "fkg-audit") return fkg_suite(opts);
  if (cfg.kind == "gks-audit") return gks_suite(opts);
  if (cfg.kind == "decomposition-audit") return decomposition_suite(opts);
  return domination_suite(opts);
}

}  // namespace

int emit_audit_results(const std::string& output_path,
                       const std::vector<AuditReport>& reports, double wall_seconds) {
  CsvDocument doc;
  doc.header = "audit,result,margin,instance";
  bool hard_failure = false;
  nlohmann::json counterexamples = nlohmann::json::array();
  for (const AuditReport& report : reports) {
    doc.rows.push_back(report.name + "," + (report.pass ? "PASS" : "FAIL") + "," +
                       fmt(report.margin, "%.6g") + "," + report.instance);
    if (!report.pass && !report.informational) hard_failure = true;
    if (!report.pass) {
      nlohmann::json item;
      item["audit"] = report.name;
      item["instance"] = report.instance;
      item["counterexample"] = report.counterexample;
      counterexamples.push_back(item);
    }
  }
  if (!counterexamples.empty()) {
    std::ofstream out(output_path + ".counterexamples.json");
    out << counterexamples.dump(2) << "\n";
  }
  write_csv(output_path, doc, wall_seconds);
  return hard_failure ? 2 : 0;
}

int run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  auto start = std::chrono::steady_clock::now();
  auto wall = [&start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  if (kAuditKinds.count(cfg.kind)) {
    std::vector<AuditReport> reports = run_suite_for(cfg);
    return emit_audit_results(cfg.output, reports, wall());
  }
  CsvDocument doc;
  int code = run_mc_experiment(cfg, doc);
  write_csv(cfg.output, doc, wall());
  return code;
}

int run_experiment_file(const std::string& path) {
  try {
    ExperimentConfig cfg = parse_config_file(path);
    return run_experiment(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace heightlab
