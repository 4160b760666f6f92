#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "heightlab/lattice.hpp"

namespace heightlab {

enum class TriState { Unchecked, Holds, Fails };

struct PotentialFlags {
  TriState symmetric = TriState::Unchecked;
  TriState lipschitz = TriState::Unchecked;
  TriState abs_fkg = TriState::Unchecked;
};

// A convex potential V: Z -> R, certified on the finite window
// [-window, window]. Convexity is mandatory and checked at construction;
// the remaining properties are recorded as flags.
class PotentialSpec {
 public:
  static PotentialSpec sos(int window = 64);                 // V(k) = |k|
  static PotentialSpec discrete_gaussian(int window = 64);   // V(k) = k^2
  static PotentialSpec from_function(std::string name, std::function<double(int)> eval,
                                     int window = 64);
  // Plain-text table, lines "k value"; '#' starts a comment. Values for
  // negative k may be omitted when the potential is meant to be symmetric.
  static PotentialSpec from_table_file(const std::string& path, int window = 64);

  const std::string& name() const { return name_; }
  int window() const { return window_; }

  double operator()(int k) const;
  // V(k+1) - 2 V(k) + V(k-1); needs |k| <= window - 1.
  double second_difference(int k) const;

  const PotentialFlags& flags() const { return flags_; }
  bool symmetric() const { return flags_.symmetric == TriState::Holds; }
  bool lipschitz() const { return flags_.lipschitz == TriState::Holds; }
  bool abs_fkg() const { return flags_.abs_fkg == TriState::Holds; }

 private:
  PotentialSpec(std::string name, std::function<double(int)> eval, int window);

  std::string name_;
  std::function<double(int)> eval_;
  int window_ = 0;
  PotentialFlags flags_;
};

// Recompute the classification flags on the certified window.
PotentialFlags classify(const PotentialSpec& v);

// A potential family V_xy(z) = V(z + a(y) - a(x)) built from per-vertex
// integer shifts. Evaluation respects the consistency identity
// value(x,y,z) == value(y,x,-z) for any base potential.
class TiltedPotential {
 public:
  TiltedPotential(PotentialSpec base) : base_(std::move(base)) {}  // zero tilt
  TiltedPotential(PotentialSpec base, std::vector<int> vertex_shift)
      : base_(std::move(base)), shift_(std::move(vertex_shift)) {}

  const PotentialSpec& base() const { return base_; }
  bool flat() const { return shift_.empty(); }
  int shift(VertexId v) const { return shift_.empty() ? 0 : shift_[v]; }
  const std::vector<int>& vertex_shift() const { return shift_; }

  // Offset of the directed edge (x,y): a(y) - a(x).
  int offset(VertexId x, VertexId y) const { return shift(y) - shift(x); }

  // V_xy(z); the canonical orientation is the id order.
  double value(VertexId x, VertexId y, int z) const {
    if (x < y) return base_(z + shift(y) - shift(x));
    return base_(-z + shift(x) - shift(y));
  }

 private:
  PotentialSpec base_;
  std::vector<int> shift_;
};

// Compose a further tilt on top; shifts add.
TiltedPotential tilt(const TiltedPotential& v, std::span<const int> a);
TiltedPotential tilt(const PotentialSpec& v, std::span<const int> a);

}  // namespace heightlab
