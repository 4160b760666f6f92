#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace heightlab {

enum class LatticeKind { Square, Triangular, Hexagonal };

LatticeKind lattice_kind_from_string(const std::string& name);
const char* to_string(LatticeKind kind);

using VertexId = int;

// Integer coordinates in a lattice-specific skewed basis (exact arithmetic).
struct Coord {
  int x = 0;
  int y = 0;
  friend bool operator==(const Coord&, const Coord&) = default;
  friend auto operator<=>(const Coord&, const Coord&) = default;
};

class PlanarLattice;
using LatticePtr = std::shared_ptr<const PlanarLattice>;

// A finite window of one of the built-in shift-invariant planar lattices:
// all vertices within graph distance `window_radius` of the root, with ids
// assigned in (distance, x, y) order so that balls are id prefixes.
class PlanarLattice {
 public:
  static LatticePtr build(LatticeKind kind, int window_radius);

  LatticeKind kind() const { return kind_; }
  int max_degree() const { return max_degree_; }
  int window_radius() const { return window_radius_; }
  int size() const { return static_cast<int>(coords_.size()); }
  VertexId root() const { return 0; }

  Coord coord(VertexId v) const { return coords_[v]; }
  int distance(VertexId v) const { return dist_[v]; }
  std::span<const VertexId> neighbours(VertexId v) const {
    return {adjacency_[v].data(), adjacency_[v].size()};
  }
  // True when all lattice neighbours of v lie inside the window.
  bool fully_materialized(VertexId v) const {
    return static_cast<int>(adjacency_[v].size()) == max_degree_;
  }
  // Id for a coordinate, or -1 if outside the window.
  VertexId find(Coord c) const;

  // Vertices at graph distance <= n from the root (a prefix of the ids).
  std::vector<VertexId> ball(int n) const;

  // Straight-line planar embedding used by the geometry checks.
  std::pair<double, double> embedding(VertexId v) const;

  // Neighbour coordinates in the infinite lattice.
  static std::vector<Coord> neighbour_coords(LatticeKind kind, Coord c);
  static int degree_of(LatticeKind kind);

 private:
  PlanarLattice() = default;

  LatticeKind kind_ = LatticeKind::Square;
  int max_degree_ = 0;
  int window_radius_ = 0;
  std::vector<Coord> coords_;
  std::vector<int> dist_;
  std::vector<std::vector<VertexId>> adjacency_;
  std::vector<std::pair<Coord, VertexId>> coord_index_;  // sorted by Coord
};

struct Edge {
  VertexId u = -1;  // u < v
  VertexId v = -1;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// A finite set of sites with its Hamiltonian support: edges with at least one
// endpoint inside, plus the outside vertices those edges reach.
class Region {
 public:
  Region() = default;
  static Region make(LatticePtr lattice, std::vector<VertexId> interior);

  const PlanarLattice& lattice() const { return *lattice_; }
  const LatticePtr& lattice_ptr() const { return lattice_; }
  const std::vector<VertexId>& interior() const { return interior_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<VertexId>& boundary() const { return boundary_; }

  int interior_size() const { return static_cast<int>(interior_.size()); }
  bool in_interior(VertexId v) const { return interior_index_[v] >= 0; }
  // Position of v in interior(), or -1.
  int interior_index(VertexId v) const { return interior_index_[v]; }

 private:
  LatticePtr lattice_;
  std::vector<VertexId> interior_;
  std::vector<Edge> edges_;
  std::vector<VertexId> boundary_;
  std::vector<int> interior_index_;
};

struct BuiltLattice {
  LatticePtr lattice;
  Region region;  // the ball of the requested radius
};

// Ball region of radius n, materialized on a window of radius n + margin so
// contour computations have room. margin >= 2.
BuiltLattice build_lattice(LatticeKind kind, int radius, int margin = 2);

Region ball_region(LatticePtr lattice, int radius);

// Decomposition of the window into the boundary-connected exterior E(S), the
// contour Gamma(S) (vertices of S adjacent to E(S)) and the interior Delta(S).
struct ContourDecomposition {
  std::vector<VertexId> set;       // S, sorted
  std::vector<VertexId> exterior;  // E(S)
  std::vector<VertexId> contour;   // Gamma(S)
  std::vector<VertexId> interior;  // Delta(S)
};

// The exterior is seeded from the window's outer layer (vertices of the
// window with a neighbour outside it), the finite stand-in for the infinite
// cluster of the complement. Throws std::invalid_argument when S reaches
// that layer.
ContourDecomposition exterior_contour(std::span<const VertexId> s, const Region& window);

bool surrounds(const ContourDecomposition& decomp, VertexId x);

}  // namespace heightlab
