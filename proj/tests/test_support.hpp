#pragma once

// Shared oracles and helpers for the test suites. Everything here is written
// independently of the library code paths it checks.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "heightlab/lattice.hpp"

namespace testsupport {

using heightlab::Coord;
using heightlab::LatticeKind;
using heightlab::VertexId;

// Neighbour rules restated from scratch (kept separate from the library).
inline std::vector<Coord> oracle_neighbours(LatticeKind kind, Coord c) {
  std::vector<Coord> out;
  switch (kind) {
    case LatticeKind::Square:
      out = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
      break;
    case LatticeKind::Triangular:
      out = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1},
             {c.x, c.y - 1}, {c.x + 1, c.y - 1}, {c.x - 1, c.y + 1}};
      break;
    case LatticeKind::Hexagonal: {
      bool even = ((c.x + c.y) % 2) == 0;
      out = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, even ? c.y + 1 : c.y - 1}};
      break;
    }
  }
  return out;
}

// Brute-force BFS ball in the infinite lattice.
inline std::set<Coord> oracle_ball(LatticeKind kind, int radius) {
  std::set<Coord> seen{{0, 0}};
  std::vector<Coord> frontier{{0, 0}};
  for (int d = 0; d < radius; ++d) {
    std::vector<Coord> next;
    for (Coord c : frontier)
      for (Coord nb : oracle_neighbours(kind, c))
        if (seen.insert(nb).second) next.push_back(nb);
    frontier = std::move(next);
  }
  return seen;
}

// Independent contour decomposition: depth-first flood from the window rim.
struct OracleContour {
  std::vector<VertexId> exterior;
  std::vector<VertexId> contour;
  std::vector<VertexId> interior;
};

inline OracleContour oracle_contour(const std::vector<VertexId>& s,
                                    const heightlab::Region& window) {
  const auto& lat = window.lattice();
  std::set<VertexId> set(s.begin(), s.end());
  std::set<VertexId> win(window.interior().begin(), window.interior().end());

  std::set<VertexId> rim;
  for (VertexId v : win) {
    if (!lat.fully_materialized(v)) {
      rim.insert(v);
      continue;
    }
    for (VertexId w : lat.neighbours(v))
      if (!win.count(w)) rim.insert(v);
  }

  std::set<VertexId> exterior;
  std::vector<VertexId> stack;
  for (VertexId v : rim)
    if (!set.count(v)) {
      exterior.insert(v);
      stack.push_back(v);
    }
  while (!stack.empty()) {
    VertexId v = stack.back();
    stack.pop_back();
    for (VertexId w : lat.neighbours(v)) {
      if (!win.count(w) || set.count(w) || exterior.count(w)) continue;
      exterior.insert(w);
      stack.push_back(w);
    }
  }

  OracleContour out;
  for (VertexId v : win) {
    if (exterior.count(v)) {
      out.exterior.push_back(v);
    } else if (set.count(v)) {
      bool touches = false;
      for (VertexId w : lat.neighbours(v))
        if (win.count(w) && exterior.count(w)) touches = true;
      (touches ? out.contour : out.interior).push_back(v);
    } else {
      out.interior.push_back(v);
    }
  }
  return out;
}

// Proper segment intersection test for the planarity scan.
inline double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

inline bool segments_conflict(std::pair<double, double> a, std::pair<double, double> b,
                              std::pair<double, double> c, std::pair<double, double> d) {
  auto orient = [](auto p, auto q, auto r) {
    double v = cross(q.first - p.first, q.second - p.second, r.first - p.first,
                     r.second - p.second);
    if (v > 1e-12) return 1;
    if (v < -1e-12) return -1;
    return 0;
  };
  int o1 = orient(a, b, c), o2 = orient(a, b, d);
  int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  auto on_segment = [&](auto p, auto q, auto r) {
    if (orient(p, q, r) != 0) return false;
    return std::min(p.first, q.first) - 1e-12 <= r.first &&
           r.first <= std::max(p.first, q.first) + 1e-12 &&
           std::min(p.second, q.second) - 1e-12 <= r.second &&
           r.second <= std::max(p.second, q.second) + 1e-12;
  };
  // Collinear overlap or a segment passing through another's interior point.
  if (on_segment(a, b, c) || on_segment(a, b, d) || on_segment(c, d, a) ||
      on_segment(c, d, b))
    return true;
  return false;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

}  // namespace testsupport
