#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace roa {

class IntervalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Closed interval [lo, hi]. Every arithmetic result is widened outward by one
// ulp on each side, so enclosures stay sound under round-to-nearest.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  constexpr Interval() = default;
  constexpr Interval(double v) : lo(v), hi(v) {}  // NOLINT(google-explicit-constructor)
  Interval(double l, double h) : lo(l), hi(h) {
    if (!(l <= h)) throw IntervalError("interval with lo > hi");
  }

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
  bool subset_of(const Interval& o) const { return o.lo <= lo && hi <= o.hi; }
};

namespace detail {
inline double down(double v) { return std::nextafter(v, -std::numeric_limits<double>::infinity()); }
inline double up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }
inline Interval outward(double l, double h) {
  Interval r;
  r.lo = down(l);
  r.hi = up(h);
  return r;
}
}  // namespace detail

inline Interval hull(const Interval& a, const Interval& b) {
  Interval r;
  r.lo = std::min(a.lo, b.lo);
  r.hi = std::max(a.hi, b.hi);
  return r;
}

inline Interval operator-(const Interval& a) {
  Interval r;
  r.lo = -a.hi;
  r.hi = -a.lo;
  return r;
}

inline Interval operator+(const Interval& a, const Interval& b) {
  return detail::outward(a.lo + b.lo, a.hi + b.hi);
}

inline Interval operator-(const Interval& a, const Interval& b) {
  return detail::outward(a.lo - b.hi, a.hi - b.lo);
}

inline Interval operator*(const Interval& a, const Interval& b) {
  const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return detail::outward(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}

inline Interval operator*(double s, const Interval& a) {
  if (s >= 0.0) return detail::outward(s * a.lo, s * a.hi);
  return detail::outward(s * a.hi, s * a.lo);
}

inline Interval operator/(const Interval& a, const Interval& b) {
  if (b.contains_zero()) throw IntervalError("interval division by an interval containing zero");
  const double q1 = a.lo / b.lo, q2 = a.lo / b.hi, q3 = a.hi / b.lo, q4 = a.hi / b.hi;
  return detail::outward(std::min({q1, q2, q3, q4}), std::max({q1, q2, q3, q4}));
}

inline Interval& operator+=(Interval& a, const Interval& b) { return a = a + b; }
inline Interval& operator-=(Interval& a, const Interval& b) { return a = a - b; }
inline Interval& operator*=(Interval& a, const Interval& b) { return a = a * b; }

// Sharp integer power: even exponents map a zero-straddling interval to [0, .].
inline Interval pow(const Interval& a, int n) {
  if (n < 1) throw IntervalError("interval power requires exponent >= 1");
  if (n == 1) return a;
  const double pl = std::pow(a.lo, n), ph = std::pow(a.hi, n);
  if (n % 2 == 1) return detail::outward(pl, ph);
  if (a.lo >= 0.0) return detail::outward(pl, ph);
  if (a.hi <= 0.0) return detail::outward(ph, pl);
  Interval r = detail::outward(0.0, std::max(pl, ph));
  r.lo = 0.0;
  return r;
}

inline Interval sqr(const Interval& a) { return pow(a, 2); }

// tanh is monotone; libm tanh is accurate to a couple of ulps, so widen by two.
inline Interval tanh(const Interval& a) {
  double l = std::tanh(a.lo), h = std::tanh(a.hi);
  l = detail::down(detail::down(l));
  h = detail::up(detail::up(h));
  Interval r;
  r.lo = std::max(l, -1.0);
  r.hi = std::min(h, 1.0);
  return r;
}

// Axis-aligned box in R^n.
class BoxRegion {
 public:
  BoxRegion() = default;
  explicit BoxRegion(std::vector<Interval> dims) : dims_(std::move(dims)) {}

  static BoxRegion centered(const std::vector<double>& center, double side) {
    std::vector<Interval> d;
    d.reserve(center.size());
    for (double c : center) d.emplace_back(c - 0.5 * side, c + 0.5 * side);
    return BoxRegion(std::move(d));
  }

  static BoxRegion point(const std::vector<double>& x) {
    std::vector<Interval> d;
    d.reserve(x.size());
    for (double c : x) d.emplace_back(c);
    return BoxRegion(std::move(d));
  }

  std::size_t dim() const { return dims_.size(); }
  const Interval& operator[](std::size_t i) const { return dims_[i]; }
  Interval& operator[](std::size_t i) { return dims_[i]; }
  const std::vector<Interval>& dims() const { return dims_; }

  std::vector<double> midpoint() const {
    std::vector<double> m(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) m[i] = dims_[i].mid();
    return m;
  }

  std::size_t widest_dim() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dims_.size(); ++i)
      if (dims_[i].width() > dims_[best].width()) best = i;
    return best;
  }

  double max_width() const {
    double w = 0.0;
    for (const auto& d : dims_) w = std::max(w, d.width());
    return w;
  }

  bool contains(const std::vector<double>& x) const {
    for (std::size_t i = 0; i < dims_.size(); ++i)
      if (!dims_[i].contains(x[i])) return false;
    return true;
  }

  // Splits at the midpoint of dimension `d`.
  std::pair<BoxRegion, BoxRegion> bisect(std::size_t d) const {
    BoxRegion a = *this, b = *this;
    const double m = dims_[d].mid();
    a.dims_[d].hi = m;
    b.dims_[d].lo = m;
    return {std::move(a), std::move(b)};
  }

  // Enclosure of the squared Euclidean norm over the box.
  Interval norm2() const {
    Interval s(0.0);
    for (const auto& d : dims_) s += sqr(d);
    return s;
  }

 private:
  std::vector<Interval> dims_;
};

}  // namespace roa
