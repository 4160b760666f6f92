#include "heightlab/potential.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "heightlab/errors.hpp"

namespace heightlab {

namespace {
constexpr double kFlagTol = 1e-9;
}

PotentialSpec::PotentialSpec(std::string name, std::function<double(int)> eval, int window)
    : name_(std::move(name)), eval_(std::move(eval)), window_(window) {
  if (window_ < 2) throw std::invalid_argument("potential window must be >= 2");
  for (int k = -window_ + 1; k <= window_ - 1; ++k) {
    double d2 = eval_(k + 1) - 2.0 * eval_(k) + eval_(k - 1);
    if (d2 < -kFlagTol)
      throw InvalidPotentialError("potential '" + name_ + "' is not convex at k=" +
                                  std::to_string(k));
  }
  flags_ = classify(*this);
}

PotentialSpec PotentialSpec::sos(int window) {
  return PotentialSpec("sos", [](int k) { return static_cast<double>(std::abs(k)); }, window);
}

PotentialSpec PotentialSpec::discrete_gaussian(int window) {
  return PotentialSpec(
      "dgauss", [](int k) { return static_cast<double>(k) * static_cast<double>(k); }, window);
}

PotentialSpec PotentialSpec::from_function(std::string name, std::function<double(int)> eval,
                                           int window) {
  return PotentialSpec(std::move(name), std::move(eval), window);
}

PotentialSpec PotentialSpec::from_table_file(const std::string& path, int window) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open potential table: " + path);
  std::map<int, double> table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    int k;
    double value;
    if (!(ss >> k)) continue;  // blank line
    if (!(ss >> value))
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected 'k value'");
    table[k] = value;
  }
  // Optional symmetric completion.
  for (int k = 1; k <= window; ++k) {
    if (!table.count(-k) && table.count(k)) table[-k] = table[k];
    if (!table.count(k) && table.count(-k)) table[k] = table[-k];
  }
  for (int k = -window; k <= window; ++k)
    if (!table.count(k))
      throw std::invalid_argument(path + ": table does not cover k=" + std::to_string(k) +
                                  " in the certified window");
  auto values = std::make_shared<std::map<int, double>>(std::move(table));
  return PotentialSpec(
      path, [values](int k) { return values->at(k); }, window);
}

double PotentialSpec::operator()(int k) const {
  if (k < -window_ || k > window_)
    throw WindowError("potential '" + name_ + "' evaluated at k=" + std::to_string(k) +
                      " outside certified window " + std::to_string(window_));
  return eval_(k);
}

double PotentialSpec::second_difference(int k) const {
  if (k < -window_ + 1 || k > window_ - 1)
    throw WindowError("second difference of '" + name_ + "' needs |k| <= window-1");
  return eval_(k + 1) - 2.0 * eval_(k) + eval_(k - 1);
}

PotentialFlags classify(const PotentialSpec& v) {
  const int w = v.window();
  PotentialFlags flags;

  flags.symmetric = TriState::Holds;
  for (int k = 1; k <= w; ++k) {
    if (std::abs(v(k) - v(-k)) > kFlagTol * std::max(1.0, std::abs(v(k)))) {
      flags.symmetric = TriState::Fails;
      break;
    }
  }

  flags.lipschitz = TriState::Holds;
  for (int k = -w; k < w; ++k) {
    if (std::abs(v(k + 1) - v(k)) > 1.0 + kFlagTol) {
      flags.lipschitz = TriState::Fails;
      break;
    }
  }

  flags.abs_fkg = TriState::Holds;
  for (int k = 0; k + 1 <= w - 1; ++k) {
    if (v.second_difference(k + 1) > v.second_difference(k) + kFlagTol) {
      flags.abs_fkg = TriState::Fails;
      break;
    }
  }
  return flags;
}

TiltedPotential tilt(const TiltedPotential& v, std::span<const int> a) {
  std::vector<int> shift(a.begin(), a.end());
  if (!v.flat()) {
    if (v.vertex_shift().size() != shift.size())
      throw std::invalid_argument("tilt: vertex function size mismatch");
    for (std::size_t i = 0; i < shift.size(); ++i) shift[i] += v.vertex_shift()[i];
  }
  return TiltedPotential(v.base(), std::move(shift));
}

TiltedPotential tilt(const PotentialSpec& v, std::span<const int> a) {
  return TiltedPotential(v, std::vector<int>(a.begin(), a.end()));
}

}  // namespace heightlab
