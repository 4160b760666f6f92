#pragma once

namespace heightlab {

// Kahan compensated accumulator; summation order still matters, so callers
// that need determinism must fix their iteration order.
class KahanSum {
 public:
  void add(double x) {
    double y = x - comp_;
    double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace heightlab
