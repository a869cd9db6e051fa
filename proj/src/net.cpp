#include "roa/net.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace roa {

std::vector<double> NetParams::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  out.insert(out.end(), W1.data().begin(), W1.data().end());
  out.insert(out.end(), b1.begin(), b1.end());
  out.insert(out.end(), W2.data().begin(), W2.data().end());
  return out;
}

void NetParams::unflatten(std::span<const double> flat) {
  if (flat.size() != size()) throw std::invalid_argument("NetParams::unflatten: size mismatch");
  auto it = flat.begin();
  std::copy(it, it + W1.data().size(), W1.data().begin());
  it += W1.data().size();
  std::copy(it, it + b1.size(), b1.begin());
  it += b1.size();
  std::copy(it, it + W2.data().size(), W2.data().begin());
}

bool NetParams::all_finite() const {
  for (double v : W1.data())
    if (!std::isfinite(v)) return false;
  for (double v : b1)
    if (!std::isfinite(v)) return false;
  for (double v : W2.data())
    if (!std::isfinite(v)) return false;
  return true;
}

void NetParams::axpy(double s, const NetParams& o) {
  if (o.W1.data().size() != W1.data().size() || o.b1.size() != b1.size() || o.W2.data().size() != W2.data().size())
    throw std::invalid_argument("NetParams::axpy: shape mismatch");
  for (std::size_t i = 0; i < W1.data().size(); ++i) W1.data()[i] += s * o.W1.data()[i];
  for (std::size_t i = 0; i < b1.size(); ++i) b1[i] += s * o.b1[i];
  for (std::size_t i = 0; i < W2.data().size(); ++i) W2.data()[i] += s * o.W2.data()[i];
}

NetParams init_params(std::size_t n, std::size_t h, std::uint64_t seed) {
  if (n == 0 || h == 0) throw std::invalid_argument("init_params: n and h must be >= 1");
  NetParams p(n, h);
  std::mt19937_64 rng(seed);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(n));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(h));
  std::uniform_real_distribution<double> u1(-a1, a1), u2(-a2, a2);
  for (double& w : p.W1.data()) w = u1(rng);
  for (double& w : p.W2.data()) w = u2(rng);
  return p;
}

namespace {

double preactivation(const NetParams& p, std::size_t k, std::span<const double> x) {
  const auto row = p.W1.row(k);
  double z = p.b1[k];
  for (std::size_t c = 0; c < row.size(); ++c) z += row[c] * x[c];
  return z;
}

void check_dim(const NetParams& p, std::span<const double> x) {
  if (x.size() != p.n()) throw std::invalid_argument("network input dimension mismatch");
}

}  // namespace

double forward(const NetParams& p, std::span<const double> x) {
  check_dim(p, x);
  double y = 0.0;
  for (std::size_t k = 0; k < p.h(); ++k) y += p.W2(0, k) * std::tanh(preactivation(p, k, x));
  return y;
}

std::vector<double> grad_input(const NetParams& p, std::span<const double> x) {
  check_dim(p, x);
  std::vector<double> g(p.n(), 0.0);
  for (std::size_t k = 0; k < p.h(); ++k) {
    const double t = std::tanh(preactivation(p, k, x));
    const double w = p.W2(0, k) * (1.0 - t * t);
    const auto row = p.W1.row(k);
    for (std::size_t c = 0; c < g.size(); ++c) g[c] += w * row[c];
  }
  return g;
}

NetParams backprop_params(const NetParams& p, std::span<const double> x, double upstream) {
  check_dim(p, x);
  NetParams g(p.n(), p.h());
  for (std::size_t k = 0; k < p.h(); ++k) {
    const double t = std::tanh(preactivation(p, k, x));
    g.W2(0, k) = upstream * t;
    const double dz = upstream * p.W2(0, k) * (1.0 - t * t);
    g.b1[k] = dz;
    for (std::size_t c = 0; c < p.n(); ++c) g.W1(k, c) = dz * x[c];
  }
  return g;
}

NetParams backprop_grad_input_dot(const NetParams& p, std::span<const double> x, std::span<const double> v,
                                  double upstream) {
  check_dim(p, x);
  check_dim(p, v);
  // s = sum_k W2_k (1 - t_k^2) q_k,  q_k = W1_k . v,  t_k = tanh(W1_k . x + b1_k)
  NetParams g(p.n(), p.h());
  for (std::size_t k = 0; k < p.h(); ++k) {
    const double t = std::tanh(preactivation(p, k, x));
    const double d = 1.0 - t * t;
    const auto row = p.W1.row(k);
    double q = 0.0;
    for (std::size_t c = 0; c < p.n(); ++c) q += row[c] * v[c];
    const double w2 = p.W2(0, k);
    g.W2(0, k) = upstream * d * q;
    const double dz = upstream * w2 * q * (-2.0 * t) * d;
    g.b1[k] = dz;
    for (std::size_t c = 0; c < p.n(); ++c) g.W1(k, c) = dz * x[c] + upstream * w2 * d * v[c];
  }
  return g;
}

std::vector<double> linear_gain(const NetParams& p) {
  std::vector<double> a(p.n(), 0.0);
  for (std::size_t k = 0; k < p.h(); ++k) {
    const double t = std::tanh(p.b1[k]);
    const double w = p.W2(0, k) * (1.0 - t * t);
    const auto row = p.W1.row(k);
    for (std::size_t c = 0; c < a.size(); ++c) a[c] += w * row[c];
  }
  return a;
}

}  // namespace roa
