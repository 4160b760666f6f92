#include "heightlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>

namespace heightlab {

LatticeKind lattice_kind_from_string(const std::string& name) {
  if (name == "square") return LatticeKind::Square;
  if (name == "triangular") return LatticeKind::Triangular;
  if (name == "hexagonal") return LatticeKind::Hexagonal;
  throw std::invalid_argument("unsupported lattice kind: " + name);
}

const char* to_string(LatticeKind kind) {
  switch (kind) {
    case LatticeKind::Square: return "square";
    case LatticeKind::Triangular: return "triangular";
    case LatticeKind::Hexagonal: return "hexagonal";
  }
  return "?";
}

int PlanarLattice::degree_of(LatticeKind kind) {
  switch (kind) {
    case LatticeKind::Square: return 4;
    case LatticeKind::Triangular: return 6;
    case LatticeKind::Hexagonal: return 3;
  }
  return 0;
}

std::vector<Coord> PlanarLattice::neighbour_coords(LatticeKind kind, Coord c) {
  switch (kind) {
    case LatticeKind::Square:
      return {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
    case LatticeKind::Triangular:
      // Axial basis: the six neighbours are +/-(1,0), +/-(0,1), +/-(1,-1).
      return {{c.x + 1, c.y},     {c.x - 1, c.y},     {c.x, c.y + 1},
              {c.x, c.y - 1},     {c.x + 1, c.y - 1}, {c.x - 1, c.y + 1}};
    case LatticeKind::Hexagonal: {
      // Brick-wall embedding of the honeycomb: a vertical edge points up
      // from (x,y) exactly when x+y is even.
      int dy = ((c.x + c.y) % 2 == 0) ? 1 : -1;
      return {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + dy}};
    }
  }
  return {};
}

LatticePtr PlanarLattice::build(LatticeKind kind, int window_radius) {
  if (window_radius < 0) throw std::invalid_argument("lattice window radius must be >= 0");

  std::map<Coord, int> dist_by_coord;
  std::deque<Coord> queue;
  dist_by_coord[{0, 0}] = 0;
  queue.push_back({0, 0});
  while (!queue.empty()) {
    Coord c = queue.front();
    queue.pop_front();
    int d = dist_by_coord[c];
    if (d == window_radius) continue;
    for (Coord nb : neighbour_coords(kind, c)) {
      if (dist_by_coord.emplace(nb, d + 1).second) queue.push_back(nb);
    }
  }

  struct Entry {
    int dist;
    Coord coord;
  };
  std::vector<Entry> entries;
  entries.reserve(dist_by_coord.size());
  for (const auto& [coord, d] : dist_by_coord) entries.push_back({d, coord});
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.dist, a.coord) < std::tie(b.dist, b.coord);
  });

  auto lattice = std::shared_ptr<PlanarLattice>(new PlanarLattice());
  lattice->kind_ = kind;
  lattice->max_degree_ = degree_of(kind);
  lattice->window_radius_ = window_radius;
  lattice->coords_.reserve(entries.size());
  lattice->dist_.reserve(entries.size());
  for (const Entry& e : entries) {
    lattice->coords_.push_back(e.coord);
    lattice->dist_.push_back(e.dist);
  }
  lattice->coord_index_.reserve(entries.size());
  for (VertexId v = 0; v < lattice->size(); ++v)
    lattice->coord_index_.emplace_back(lattice->coords_[v], v);
  std::sort(lattice->coord_index_.begin(), lattice->coord_index_.end());

  lattice->adjacency_.resize(entries.size());
  for (VertexId v = 0; v < lattice->size(); ++v) {
    for (Coord nb : neighbour_coords(kind, lattice->coords_[v])) {
      VertexId w = lattice->find(nb);
      if (w >= 0) lattice->adjacency_[v].push_back(w);
    }
    std::sort(lattice->adjacency_[v].begin(), lattice->adjacency_[v].end());
  }
  return lattice;
}

VertexId PlanarLattice::find(Coord c) const {
  auto it = std::lower_bound(coord_index_.begin(), coord_index_.end(),
                             std::make_pair(c, VertexId{-1}));
  if (it != coord_index_.end() && it->first == c) return it->second;
  return -1;
}

std::vector<VertexId> PlanarLattice::ball(int n) const {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < size() && dist_[v] <= n; ++v) out.push_back(v);
  return out;
}

std::pair<double, double> PlanarLattice::embedding(VertexId v) const {
  Coord c = coords_[v];
  if (kind_ == LatticeKind::Triangular)
    return {c.x + 0.5 * c.y, 0.8660254037844386 * c.y};
  return {static_cast<double>(c.x), static_cast<double>(c.y)};
}

Region Region::make(LatticePtr lattice, std::vector<VertexId> interior) {
  if (!lattice) throw std::invalid_argument("region requires a lattice");
  std::sort(interior.begin(), interior.end());
  interior.erase(std::unique(interior.begin(), interior.end()), interior.end());
  if (interior.empty()) throw std::invalid_argument("region interior is empty");
  if (interior.front() < 0 || interior.back() >= lattice->size())
    throw std::invalid_argument("region vertex id outside the lattice window");

  Region region;
  region.lattice_ = std::move(lattice);
  region.interior_ = std::move(interior);
  region.interior_index_.assign(region.lattice_->size(), -1);
  for (int i = 0; i < region.interior_size(); ++i)
    region.interior_index_[region.interior_[i]] = i;

  for (VertexId u : region.interior_) {
    if (!region.lattice_->fully_materialized(u))
      throw std::invalid_argument(
          "region vertex sits on the lattice window edge; enlarge the window");
    for (VertexId w : region.lattice_->neighbours(u)) {
      Edge e{std::min(u, w), std::max(u, w)};
      region.edges_.push_back(e);
    }
  }
  std::sort(region.edges_.begin(), region.edges_.end());
  region.edges_.erase(std::unique(region.edges_.begin(), region.edges_.end()),
                      region.edges_.end());

  for (const Edge& e : region.edges_) {
    if (!region.in_interior(e.u)) region.boundary_.push_back(e.u);
    if (!region.in_interior(e.v)) region.boundary_.push_back(e.v);
  }
  std::sort(region.boundary_.begin(), region.boundary_.end());
  region.boundary_.erase(std::unique(region.boundary_.begin(), region.boundary_.end()),
                         region.boundary_.end());
  return region;
}

Region ball_region(LatticePtr lattice, int radius) {
  auto ids = lattice->ball(radius);
  return Region::make(std::move(lattice), std::move(ids));
}

BuiltLattice build_lattice(LatticeKind kind, int radius, int margin) {
  if (radius < 0) throw std::invalid_argument("lattice ball radius must be >= 0");
  if (margin < 2) throw std::invalid_argument("lattice window margin must be >= 2");
  auto lattice = PlanarLattice::build(kind, radius + margin);
  Region region = ball_region(lattice, radius);
  return {std::move(lattice), std::move(region)};
}

ContourDecomposition exterior_contour(std::span<const VertexId> s, const Region& window) {
  const PlanarLattice& lat = window.lattice();

  std::vector<VertexId> set(s.begin(), s.end());
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());

  std::vector<char> in_set(lat.size(), 0);
  for (VertexId v : set) {
    if (v < 0 || v >= lat.size() || !window.in_interior(v))
      throw std::invalid_argument("contour set vertex outside the window");
    in_set[v] = 1;
  }

  // Outer layer: window vertices with a neighbour outside the window.
  std::vector<VertexId> rim;
  for (VertexId v : window.interior()) {
    bool on_rim = !lat.fully_materialized(v);
    for (VertexId w : lat.neighbours(v))
      if (!window.in_interior(w)) on_rim = true;
    if (on_rim) {
      if (in_set[v])
        throw std::invalid_argument("contour window too small: set touches the outer layer");
      rim.push_back(v);
    }
  }

  // Flood the complement of S from the outer layer.
  std::vector<char> in_exterior(lat.size(), 0);
  std::deque<VertexId> queue;
  for (VertexId v : rim) {
    in_exterior[v] = 1;
    queue.push_back(v);
  }
  while (!queue.empty()) {
    VertexId v = queue.front();
    queue.pop_front();
    for (VertexId w : lat.neighbours(v)) {
      if (!window.in_interior(w) || in_set[w] || in_exterior[w]) continue;
      in_exterior[w] = 1;
      queue.push_back(w);
    }
  }

  ContourDecomposition decomp;
  decomp.set = std::move(set);
  for (VertexId v : window.interior()) {
    if (in_exterior[v]) {
      decomp.exterior.push_back(v);
    } else if (in_set[v]) {
      bool touches_exterior = false;
      for (VertexId w : lat.neighbours(v))
        if (w >= 0 && window.in_interior(w) && in_exterior[w]) touches_exterior = true;
      if (touches_exterior)
        decomp.contour.push_back(v);
      else
        decomp.interior.push_back(v);
    } else {
      decomp.interior.push_back(v);
    }
  }
  return decomp;
}

bool surrounds(const ContourDecomposition& decomp, VertexId x) {
  return std::binary_search(decomp.interior.begin(), decomp.interior.end(), x);
}

}  // namespace heightlab
