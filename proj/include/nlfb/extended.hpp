#pragma once

#include <limits>
#include <ostream>
#include <stdexcept>

namespace nlfb {

/// Nonnegative real extended by +infinity, with the infinite case tagged
/// explicitly rather than encoded in a floating-point sentinel.
class ExtendedReal {
public:
  static ExtendedReal finite(double v) { return ExtendedReal(v, false); }
  static ExtendedReal infinity() { return ExtendedReal(0.0, true); }

  bool is_finite() const { return !infinite_; }
  bool is_infinite() const { return infinite_; }

  double value() const {
    if (infinite_) throw std::domain_error("ExtendedReal: value() of infinity");
    return value_;
  }

  /// Finite value, or +inf for export to formats that need a double.
  double as_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }
  friend bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }
  friend std::ostream& operator<<(std::ostream& os, const ExtendedReal& x) {
    return x.infinite_ ? (os << "inf") : (os << x.value_);
  }

private:
  ExtendedReal(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

}  // namespace nlfb
