#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "roa/linalg.hpp"

namespace roa {

// One-hidden-layer tanh network  phi(x) = W2 tanh(W1 x + b1)  with scalar
// output and no output bias.
struct NetParams {
  DenseMatrix W1;          // h x n
  std::vector<double> b1;  // h
  DenseMatrix W2;          // 1 x h

  NetParams() = default;
  NetParams(std::size_t n, std::size_t h) : W1(h, n), b1(h, 0.0), W2(1, h) {}

  std::size_t n() const { return W1.cols(); }
  std::size_t h() const { return W1.rows(); }
  std::size_t size() const { return W1.data().size() + b1.size() + W2.data().size(); }

  // Flat view in the order W1 (row-major), b1, W2.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);

  bool all_finite() const;

  // Accumulates s * other into this (shapes must match).
  void axpy(double s, const NetParams& other);
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
NetParams init_params(std::size_t n, std::size_t h, std::uint64_t seed);

double forward(const NetParams& p, std::span<const double> x);
std::vector<double> grad_input(const NetParams& p, std::span<const double> x);

// d(upstream * phi(x)) / d theta.
NetParams backprop_params(const NetParams& p, std::span<const double> x, double upstream);

// d(upstream * (grad_x phi(x) . v)) / d theta: the second-path gradient that
// appears once the loss depends on the directional derivative of phi.
NetParams backprop_grad_input_dot(const NetParams& p, std::span<const double> x, std::span<const double> v,
                                  double upstream);

// D = diag(1 - tanh^2(b1)) folded into the row vector W2 D W1 (1 x n).
std::vector<double> linear_gain(const NetParams& p);

}  // namespace roa
