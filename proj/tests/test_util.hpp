#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "roa/expr.hpp"
#include "roa/interval.hpp"

namespace roa::testing {

// Random expression over n variables; no division so it is defined everywhere.
inline Expr random_expr(std::mt19937_64& rng, std::size_t n, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 7);
  std::uniform_real_distribution<double> cval(-2.0, 2.0);
  const int k = pick(rng);
  switch (k) {
    case 0: return expr::constant(std::round(cval(rng) * 100) / 100);
    case 1: return expr::var(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    case 2: return expr::neg(random_expr(rng, n, depth - 1));
    case 3: return expr::add(random_expr(rng, n, depth - 1), random_expr(rng, n, depth - 1));
    case 4: return expr::sub(random_expr(rng, n, depth - 1), random_expr(rng, n, depth - 1));
    case 5: return expr::mul(random_expr(rng, n, depth - 1), random_expr(rng, n, depth - 1));
    case 6: return expr::pow(random_expr(rng, n, depth - 1), std::uniform_int_distribution<int>(1, 4)(rng));
    default: return expr::tanh(random_expr(rng, n, depth - 1));
  }
}

inline BoxRegion random_box(std::mt19937_64& rng, std::size_t n, double extent, double max_width) {
  std::uniform_real_distribution<double> c(-extent, extent), w(0.0, max_width);
  std::vector<Interval> d;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = c(rng);
    d.emplace_back(lo, lo + w(rng));
  }
  return BoxRegion(std::move(d));
}

inline std::vector<double> random_point_in(std::mt19937_64& rng, const BoxRegion& b) {
  std::vector<double> x(b.dim());
  for (std::size_t i = 0; i < b.dim(); ++i) x[i] = std::uniform_real_distribution<double>(b[i].lo, b[i].hi)(rng);
  for (std::size_t i = 0; i < b.dim(); ++i) x[i] = std::clamp(x[i], b[i].lo, b[i].hi);
  return x;
}

}  // namespace roa::testing
