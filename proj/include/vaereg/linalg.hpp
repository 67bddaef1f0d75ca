// vaereg/linalg.hpp

// Copyright 2026  The vaereg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Small dense real linear algebra: a row-major Matrix, products, Cholesky
// factorization with SPD solves, and a cyclic Jacobi symmetric eigensolver.
// Everything is double precision and O(n^3) textbook.

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vaereg/error.hpp"

namespace vaereg {

using Vector = std::vector<double>;

inline constexpr double kLog2Pi = 1.8378770664093453;  // ln(2 pi)

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_)
      fail(Errc::kShapeMismatch, "matrix entries do not match rows*cols");
  }

  static Matrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto &row : rows) {
      if (row.size() != c) fail(Errc::kShapeMismatch, "ragged initializer");
      std::copy(row.begin(), row.end(), m.data_.begin() + i * c);
      ++i;
    }
    return m;
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(const Vector &d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double &operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  Vector row_vector(std::size_t r) const {
    auto s = row(r);
    return Vector(s.begin(), s.end());
  }
  Vector col_vector(std::size_t c) const {
    Vector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }
  void set_row(std::size_t r, std::span<const double> v) {
    if (v.size() != cols_) fail(Errc::kShapeMismatch, "set_row width");
    std::copy(v.begin(), v.end(), data_.begin() + r * cols_);
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double> &storage() const { return data_; }

  bool operator==(const Matrix &other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Elementary operations.

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(Errc::kShapeMismatch, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline Vector add(const Vector &a, const Vector &b) {
  if (a.size() != b.size()) fail(Errc::kShapeMismatch, "add: length mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vector sub(const Vector &a, const Vector &b) {
  if (a.size() != b.size()) fail(Errc::kShapeMismatch, "sub: length mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vector scaled(const Vector &a, double s) {
  Vector r(a);
  for (auto &x : r) x *= s;
  return r;
}

inline Matrix transpose(const Matrix &a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// a * b. The inner loop order (i, k, j) makes each output row depend only on
/// the matching row of a, summed in a fixed order.
inline Matrix matmul(const Matrix &a, const Matrix &b) {
  if (a.cols() != b.rows())
    fail(Errc::kShapeMismatch, "matmul: " + std::to_string(a.rows()) + "x" +
                                   std::to_string(a.cols()) + " * " +
                                   std::to_string(b.rows()) + "x" +
                                   std::to_string(b.cols()));
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double *ci = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double *bk = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

/// a^T * b
inline Matrix matmul_tn(const Matrix &a, const Matrix &b) {
  if (a.rows() != b.rows()) fail(Errc::kShapeMismatch, "matmul_tn: rows");
  Matrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double *bk = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double *ci = c.row(i).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

/// a * b^T
inline Matrix matmul_nt(const Matrix &a, const Matrix &b) {
  if (a.cols() != b.cols()) fail(Errc::kShapeMismatch, "matmul_nt: cols");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto bj = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < ai.size(); ++k) s += ai[k] * bj[k];
      c(i, j) = s;
    }
  }
  return c;
}

inline Vector matvec(const Matrix &a, std::span<const double> x) {
  if (a.cols() != x.size()) fail(Errc::kShapeMismatch, "matvec: width");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

/// a^T * x
inline Vector matvec_t(const Matrix &a, std::span<const double> x) {
  if (a.rows() != x.size()) fail(Errc::kShapeMismatch, "matvec_t: height");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += ai[j] * x[i];
  }
  return y;
}

inline Matrix add(const Matrix &a, const Matrix &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(Errc::kShapeMismatch, "matrix add");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
  return c;
}

inline Matrix sub(const Matrix &a, const Matrix &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(Errc::kShapeMismatch, "matrix sub");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

inline Matrix scaled(const Matrix &a, double s) {
  Matrix c = a;
  for (auto &x : c.data()) x *= s;
  return c;
}

/// a += s * x y^T
inline void add_outer(Matrix &a, std::span<const double> x,
                      std::span<const double> y, double s = 1.0) {
  if (a.rows() != x.size() || a.cols() != y.size())
    fail(Errc::kShapeMismatch, "add_outer");
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double sx = s * x[i];
    auto ai = a.row(i);
    for (std::size_t j = 0; j < y.size(); ++j) ai[j] += sx * y[j];
  }
}

inline double trace(const Matrix &a) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

inline double frobenius_norm(const Matrix &a) { return norm2(a.data()); }

inline double max_abs(const Matrix &a) {
  double m = 0.0;
  for (double x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

/// ||a - b||_F / ||b||_F
inline double relative_frobenius_error(const Matrix &a, const Matrix &b) {
  return frobenius_norm(sub(a, b)) / frobenius_norm(b);
}

inline constexpr double kSymmetryTolerance = 1e-9;

inline bool is_symmetric(const Matrix &a, double rel_tol = kSymmetryTolerance) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(max_abs(a), 1e-300);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > rel_tol * scale) return false;
  return true;
}

/// (a + a^T) / 2
inline Matrix symmetrized(const Matrix &a) {
  if (a.rows() != a.cols()) fail(Errc::kShapeMismatch, "symmetrize: not square");
  Matrix s = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  return s;
}

inline void require_symmetric(const Matrix &a, const char *who) {
  if (a.rows() != a.cols())
    fail(Errc::kShapeMismatch, std::string(who) + ": matrix is not square");
  if (!is_symmetric(a))
    fail(Errc::kShapeMismatch, std::string(who) + ": matrix is not symmetric");
}

// ---------------------------------------------------------------------------
// Cholesky and SPD solves.

/// Lower-triangular L with L L^T = a. The input is symmetrized first; a pivot
/// at or below 1e-13 times the largest diagonal entry is rejected.
inline Matrix cholesky(const Matrix &a_in) {
  require_symmetric(a_in, "cholesky");
  const Matrix a = symmetrized(a_in);
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
  const double tol = 1e-13 * max_diag;

  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > tol))
      fail(Errc::kNotPositiveDefinite,
           "cholesky: pivot " + std::to_string(j) + " = " + std::to_string(d));
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

/// Solves l y = b for lower-triangular l.
inline Vector solve_lower(const Matrix &l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) fail(Errc::kShapeMismatch, "solve_lower");
  Vector y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = y[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  return y;
}

/// Solves l^T x = y for lower-triangular l.
inline Vector solve_lower_transpose(const Matrix &l, std::span<const double> y) {
  const std::size_t n = l.rows();
  if (y.size() != n) fail(Errc::kShapeMismatch, "solve_lower_transpose");
  Vector x(y.begin(), y.end());
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

inline Vector cholesky_solve(const Matrix &l, std::span<const double> b) {
  return solve_lower_transpose(l, solve_lower(l, b));
}

inline Vector solve_spd(const Matrix &a, std::span<const double> b) {
  if (b.size() != a.rows()) fail(Errc::kShapeMismatch, "solve_spd: rhs length");
  return cholesky_solve(cholesky(a), b);
}

/// Solves a X = b column by column.
inline Matrix solve_spd(const Matrix &a, const Matrix &b) {
  if (b.rows() != a.rows()) fail(Errc::kShapeMismatch, "solve_spd: rhs rows");
  const Matrix l = cholesky(a);
  Matrix x(b.rows(), b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    Vector col = cholesky_solve(l, b.col_vector(c));
    for (std::size_t r = 0; r < b.rows(); ++r) x(r, c) = col[r];
  }
  return x;
}

inline Matrix inverse_spd(const Matrix &a) {
  return symmetrized(solve_spd(a, Matrix::identity(a.rows())));
}

/// log det(a) from its Cholesky factor.
inline double log_det_from_cholesky(const Matrix &l) {
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

inline double log_det_spd(const Matrix &a) {
  return log_det_from_cholesky(cholesky(a));
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition.

struct SymEig {
  Vector values;   // descending
  Matrix vectors;  // column k pairs with values[k]
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
/// 1e-12 of the input's Frobenius norm, at most 100 sweeps. Eigenvector signs
/// are fixed so that the largest-magnitude entry of each column is positive.
inline SymEig sym_eig(const Matrix &a_in) {
  require_symmetric(a_in, "sym_eig");
  Matrix a = symmetrized(a_in);
  const std::size_t n = a.rows();
  Matrix v = Matrix::identity(n);

  const double scale = frobenius_norm(a);
  const double threshold = 1e-12 * scale;
  constexpr int kMaxSweeps = 100;

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  bool converged = scale == 0.0 || off_norm() <= threshold;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = off_norm() <= threshold;
  }
  if (!converged)
    fail(Errc::kConvergenceFailure, "sym_eig: no convergence in 100 sweeps");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(i, i) > a(j, j);
  });

  SymEig out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.values[k] = a(src, src);
    std::size_t arg = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(v(r, src)) > std::abs(v(arg, src))) arg = r;
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = sign * v(r, src);
  }
  return out;
}

}  // namespace vaereg
