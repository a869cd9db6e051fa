#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace roa {

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diag(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  DenseMatrix transpose() const;
  bool is_symmetric(double tol = 1e-12) const;
  double frobenius() const;
  double max_abs() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);
std::vector<double> operator*(const DenseMatrix& a, std::span<const double> x);

// Solves A^T P + P A = -Q for symmetric P via Kronecker vectorization.
DenseMatrix solve_lyapunov(const DenseMatrix& a, const DenseMatrix& q);

struct EigExtrema {
  double lambda_min;
  double lambda_max;
};

struct SymEig {
  std::vector<double> values;  // ascending
  DenseMatrix vectors;         // column k is the eigenvector of values[k]
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymEig sym_eig(const DenseMatrix& m);
EigExtrema sym_eig_extrema(const DenseMatrix& m);

bool cholesky_pd(const DenseMatrix& m);
// Lower-triangular L with L L^T = m; throws LinalgError when m is not PD.
DenseMatrix cholesky_lower(const DenseMatrix& m);

struct SpectralNorm {
  double sigma;
  std::vector<double> u;  // left singular vector (rows)
  std::vector<double> v;  // right singular vector (cols)
};

// Largest singular value with its singular vectors (power iteration on the
// smaller Gram matrix).
SpectralNorm spectral_norm_full(const DenseMatrix& m);
double spectral_norm(const DenseMatrix& m);

// Hurwitz test through the converse Lyapunov theorem.
bool is_hurwitz(const DenseMatrix& a);

}  // namespace roa
