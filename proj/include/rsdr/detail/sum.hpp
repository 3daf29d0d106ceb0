#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace rsdr::detail {

/// Exactly rounded floating-point accumulator (Shewchuk partials, the fsum
/// algorithm).  The returned value is the exact sum of all inputs rounded
/// once to double, so it does not depend on the order in which values were
/// added.  That property backs the bitwise permutation invariance of the
/// distance-covariance statistics.
class ExactSum {
 public:
  ExactSum() { partials_.reserve(16); }

  void add(double x) {
    std::size_t used = 0;
    for (std::size_t i = 0; i < partials_.size(); ++i) {
      double y = partials_[i];
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[used++] = lo;
      x = hi;
    }
    partials_.resize(used);
    partials_.push_back(x);
  }

  /// Exact sum of everything added so far, correctly rounded (round half to
  /// even across partials).
  double value() const {
    std::size_t n = partials_.size();
    double hi = 0.0;
    if (n > 0) {
      hi = partials_[--n];
      double lo = 0.0;
      while (n > 0) {
        const double x = hi;
        const double y = partials_[--n];
        hi = x + y;
        const double yr = hi - x;
        lo = y - yr;
        if (lo != 0.0) break;
      }
      // If the roundoff and the next partial have the same sign, the
      // half-ulp case must round away from hi.
      if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                    (lo > 0.0 && partials_[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        if (y == x - hi) hi = x;
      }
    }
    return hi;
  }

  void reset() { partials_.clear(); }

 private:
  std::vector<double> partials_;
};

/// Neumaier compensated accumulator: cheap, order-dependent at the last ulp
/// but with error independent of the number of terms.  Used on hot paths
/// that only need ~1e-14 relative accuracy.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

  void reset() {
    sum_ = 0.0;
    comp_ = 0.0;
  }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace rsdr::detail
