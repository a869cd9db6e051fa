#include "roa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace roa {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw LinalgError("matrix data length does not match shape");
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw LinalgError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diag(std::span<const double> d) {
  DenseMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool DenseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  const double scale = std::max(1.0, max_abs());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = r + 1; c < cols_; ++c)
      if (std::fabs((*this)(r, c) - (*this)(c, r)) > tol * scale) return false;
  return true;
}

double DenseMatrix::frobenius() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw LinalgError("matrix product shape mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw LinalgError("matrix sum shape mismatch");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw LinalgError("matrix difference shape mismatch");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

std::vector<double> operator*(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw LinalgError("matrix-vector shape mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    y[i] = std::inner_product(r.begin(), r.end(), x.begin(), 0.0);
  }
  return y;
}

namespace {

// In-place LU with partial pivoting; returns false when a pivot is negligible.
bool lu_solve(std::vector<double>& m, std::vector<double>& rhs, std::size_t n) {
  double scale = 0.0;
  for (double v : m) scale = std::max(scale, std::fabs(v));
  const double tiny = 1e-12 * std::max(scale, 1e-300);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(m[i * n + k]) > std::fabs(m[piv * n + k])) piv = i;
    if (std::fabs(m[piv * n + k]) <= tiny) return false;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m[k * n + j], m[piv * n + j]);
      std::swap(rhs[k], rhs[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = m[i * n + k] / m[k * n + k];
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) m[i * n + j] -= f * m[k * n + j];
      rhs[i] -= f * rhs[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = rhs[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= m[k * n + j] * rhs[j];
    rhs[k] = s / m[k * n + k];
  }
  return true;
}

}  // namespace

DenseMatrix solve_lyapunov(const DenseMatrix& a, const DenseMatrix& q) {
  const std::size_t n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n) throw LinalgError("solve_lyapunov: shape mismatch");
  if (n == 0 || n > 16) throw LinalgError("solve_lyapunov: dimension must be in [1, 16]");

  // Row-major vec: P(i,j) -> i*n + j.  (A^T P)(i,j) = sum_k A(k,i) P(k,j),
  // (P A)(i,j) = sum_k P(i,k) A(k,j).
  const std::size_t m = n * n;
  std::vector<double> k(m * m, 0.0), rhs(m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t row = i * n + j;
      for (std::size_t l = 0; l < n; ++l) {
        k[row * m + l * n + j] += a(l, i);
        k[row * m + i * n + l] += a(l, j);
      }
      rhs[row] = -q(i, j);
    }
  if (!lu_solve(k, rhs, m)) throw LinalgError("Lyapunov equation has no unique solution");

  DenseMatrix p(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) = 0.5 * (rhs[i * n + j] + rhs[j * n + i]);
  return p;
}

SymEig sym_eig(const DenseMatrix& m) {
  if (!m.is_symmetric(1e-12)) throw LinalgError("sym_eig: matrix is not symmetric");
  const std::size_t n = m.rows();
  DenseMatrix a = m;
  DenseMatrix v = DenseMatrix::identity(n);
  const double scale = std::max(m.frobenius(), 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(2.0 * off) <= 1e-15 * scale) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymEig out{std::vector<double>(n), DenseMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

EigExtrema sym_eig_extrema(const DenseMatrix& m) {
  if (m.rows() == 0) throw LinalgError("sym_eig_extrema: empty matrix");
  const SymEig e = sym_eig(m);
  return {e.values.front(), e.values.back()};
}

namespace {

bool cholesky_factor(const DenseMatrix& m, DenseMatrix& l) {
  const std::size_t n = m.rows();
  if (m.cols() != n || n == 0) return false;
  l = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return false;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return true;
}

}  // namespace

bool cholesky_pd(const DenseMatrix& m) {
  DenseMatrix l;
  return cholesky_factor(m, l);
}

DenseMatrix cholesky_lower(const DenseMatrix& m) {
  DenseMatrix l;
  if (!cholesky_factor(m, l)) throw LinalgError("cholesky: matrix is not positive definite");
  return l;
}

SpectralNorm spectral_norm_full(const DenseMatrix& m) {
  const std::size_t r = m.rows(), c = m.cols();
  SpectralNorm out{0.0, std::vector<double>(r, 0.0), std::vector<double>(c, 0.0)};
  if (r == 0 || c == 0 || m.max_abs() == 0.0) {
    if (r) out.u[0] = 1.0;
    if (c) out.v[0] = 1.0;
    return out;
  }

  // Work with the Gram matrix on the smaller side.
  const bool right = c <= r;
  const DenseMatrix mt = m.transpose();
  const DenseMatrix gram = right ? mt * m : m * mt;
  const std::size_t k = gram.rows();

  std::vector<double> x(k);
  for (std::size_t i = 0; i < k; ++i) x[i] = 1.0 + 0.1 * static_cast<double>(i);
  double lambda = 0.0;
  bool converged = false;
  for (int it = 0; it < 20000; ++it) {
    std::vector<double> y = gram * x;
    const double norm = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
    if (norm == 0.0) break;
    for (double& v : y) v /= norm;
    double diff = 0.0;
    for (std::size_t i = 0; i < k; ++i) diff = std::max(diff, std::fabs(y[i] - x[i]));
    x = std::move(y);
    const double prev = lambda;
    lambda = norm;
    if (it >= 1 && std::fabs(lambda - prev) <= 1e-15 * lambda && diff <= 1e-13) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    // Nearly repeated top singular value: fall back to the exact small eigenproblem.
    const SymEig e = sym_eig(0.5 * (gram + gram.transpose()));
    lambda = e.values.back();
    for (std::size_t i = 0; i < k; ++i) x[i] = e.vectors(i, k - 1);
  }
  const std::vector<double> gx = gram * x;
  lambda = std::inner_product(x.begin(), x.end(), gx.begin(), 0.0);
  out.sigma = std::sqrt(std::max(lambda, 0.0));

  // Complete the singular pair: other = M x / sigma (or M^T x / sigma).
  std::vector<double> other = right ? m * x : mt * x;
  for (double& v : other) v /= out.sigma;
  if (right) {
    out.v = std::move(x);
    out.u = std::move(other);
  } else {
    out.u = std::move(x);
    out.v = std::move(other);
  }
  return out;
}

double spectral_norm(const DenseMatrix& m) { return spectral_norm_full(m).sigma; }

bool is_hurwitz(const DenseMatrix& a) {
  try {
    return cholesky_pd(solve_lyapunov(a, DenseMatrix::identity(a.rows())));
  } catch (const LinalgError&) {
    return false;
  }
}

}  // namespace roa
