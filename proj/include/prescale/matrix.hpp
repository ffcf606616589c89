#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "prescale/errors.hpp"

namespace prescale {

// Dense row-major matrix of doubles. Small on purpose: just what the
// forecasting code needs, no view machinery.
class Matrix {
public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), d_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return d_.empty(); }

  double& operator()(int r, int c) { return d_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return d_[static_cast<std::size_t>(r) * cols_ + c]; }

  double* row(int r) { return d_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const { return d_.data() + static_cast<std::size_t>(r) * cols_; }

  std::vector<double>& data() { return d_; }
  const std::vector<double>& data() const { return d_; }

  void fill(double v) { std::fill(d_.begin(), d_.end(), v); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> d_;
};

inline void require_shape(const Matrix& m, int rows, int cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
  }
}

namespace detail {

// Accumulating kernel c += a * b over row-major buffers, four rows of a at a
// time for register reuse. Each output row keeps plain p-then-j accumulation
// order, so results match the straightforward triple loop bit for bit.
inline void matmul_rows_acc(const double* a, const double* b, double* c, int n, int k, int m) {
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* a0 = a + static_cast<std::size_t>(i) * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    double* c0 = c + static_cast<std::size_t>(i) * m;
    double* c1 = c0 + m;
    double* c2 = c1 + m;
    double* c3 = c2 + m;
    for (int p = 0; p < k; ++p) {
      const double v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
      const double* bp = b + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) {
        const double bj = bp[j];
        c0[j] += v0 * bj;
        c1[j] += v1 * bj;
        c2[j] += v2 * bj;
        c3[j] += v3 * bj;
      }
    }
  }
  for (; i < n; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

}  // namespace detail

// c = a * b
inline void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  if (c.rows() != a.rows() || c.cols() != b.cols()) c = Matrix(a.rows(), b.cols());
  c.fill(0.0);
  detail::matmul_rows_acc(a.data().data(), b.data().data(), c.data().data(), a.rows(), a.cols(),
                          b.cols());
}

// c = a * b^T. b is transposed into a scratch first so the inner loop runs
// over contiguous memory with independent accumulators (vectorizes without
// reassociating floating-point sums).
inline void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: inner dimensions differ");
  if (c.rows() != a.rows() || c.cols() != b.rows()) c = Matrix(a.rows(), b.rows());
  c.fill(0.0);
  const int k = a.cols(), m = b.rows();
  std::vector<double> bt(static_cast<std::size_t>(k) * m);
  for (int j = 0; j < m; ++j) {
    const double* bj = b.row(j);
    for (int p = 0; p < k; ++p) bt[static_cast<std::size_t>(p) * m + j] = bj[p];
  }
  detail::matmul_rows_acc(a.data().data(), bt.data(), c.data().data(), a.rows(), k, m);
}

// c += a^T * b
inline void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn_acc: inner dimensions differ");
  if (c.rows() != a.cols() || c.cols() != b.cols()) throw ShapeError("matmul_tn_acc: bad output shape");
  const int n = a.rows(), k = a.cols(), m = b.cols();
  int p = 0;
  for (; p + 4 <= n; p += 4) {
    const double* a0 = a.row(p);
    const double* a1 = a.row(p + 1);
    const double* a2 = a.row(p + 2);
    const double* a3 = a.row(p + 3);
    const double* b0 = b.row(p);
    const double* b1 = b.row(p + 1);
    const double* b2 = b.row(p + 2);
    const double* b3 = b.row(p + 3);
    for (int i = 0; i < k; ++i) {
      double* ci = c.row(i);
      const double v0 = a0[i], v1 = a1[i], v2 = a2[i], v3 = a3[i];
      for (int j = 0; j < m; ++j) ci[j] += v0 * b0[j] + v1 * b1[j] + v2 * b2[j] + v3 * b3[j];
    }
  }
  for (; p < n; ++p) {
    const double* ap = a.row(p);
    const double* bp = b.row(p);
    for (int i = 0; i < k; ++i) {
      double* ci = c.row(i);
      const double api = ap[i];
      for (int j = 0; j < m; ++j) ci[j] += api * bp[j];
    }
  }
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c;
  matmul(a, b, c);
  return c;
}

inline void add_inplace(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("add_inplace: shape mismatch");
  for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] += b.data()[i];
}

inline void scale_inplace(Matrix& a, double s) {
  for (double& v : a.data()) v *= s;
}

// Solves the square system a*x = b in place by Gaussian elimination with
// partial pivoting. Returns false when a pivot degenerates (singular system).
inline bool solve_linear(Matrix a, std::vector<double> b, std::vector<double>& x) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(b.size()) != n) throw ShapeError("solve_linear: bad shapes");
  double scale = 0.0;
  for (double v : a.data()) scale = std::max(scale, std::fabs(v));
  if (scale == 0.0) return false;
  const double tol = scale * 1e-13;
  std::vector<int> piv(n);
  for (int i = 0; i < n; ++i) piv[i] = i;
  for (int col = 0; col < n; ++col) {
    int best = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(a(r, col)) > std::fabs(a(best, col))) best = r;
    if (std::fabs(a(best, col)) <= tol) return false;
    if (best != col) {
      for (int j = 0; j < n; ++j) std::swap(a(col, j), a(best, j));
      std::swap(b[col], b[best]);
    }
    const double inv = 1.0 / a(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) * inv;
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return true;
}

}  // namespace prescale
