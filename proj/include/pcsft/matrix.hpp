#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "pcsft/error.hpp"

namespace pcsft {

/// Dense square matrix of doubles, row-major storage.
struct Matrix {
  int n = 0;
  std::vector<double> a;

  Matrix() = default;
  explicit Matrix(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}
  Matrix(int dim, std::vector<double> entries) : n(dim), a(std::move(entries)) {
    if (n < 0 || static_cast<std::size_t>(n) * n != a.size())
      throw Error(ErrorCode::BadArgs, "matrix entries do not match dimension");
  }

  int dim() const { return n; }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

  static Matrix identity(int dim) {
    Matrix m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline Matrix operator*(const Matrix& x, const Matrix& y) {
  if (x.n != y.n) throw Error(ErrorCode::DimMismatch, "matrix product dimensions differ");
  Matrix r(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int k = 0; k < x.n; ++k) {
      const double xik = x(i, k);
      if (xik == 0.0) continue;
      for (int j = 0; j < x.n; ++j) r(i, j) += xik * y(k, j);
    }
  return r;
}

inline std::vector<double> mat_vec(const Matrix& m, const std::vector<double>& v) {
  if (m.n != static_cast<int>(v.size()))
    throw Error(ErrorCode::DimMismatch, "matrix-vector dimensions differ");
  std::vector<double> r(v.size(), 0.0);
  for (int i = 0; i < m.n; ++i) {
    double s = 0.0;
    for (int j = 0; j < m.n; ++j) s += m(i, j) * v[j];
    r[i] = s;
  }
  return r;
}

inline Matrix transpose(const Matrix& m) {
  Matrix r(m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) r(j, i) = m(i, j);
  return r;
}

inline double trace(const Matrix& m) {
  double s = 0.0;
  for (int i = 0; i < m.n; ++i) s += m(i, i);
  return s;
}

inline double max_abs(const Matrix& m) {
  double s = 0.0;
  for (double v : m.a) s = std::max(s, std::abs(v));
  return s;
}

inline double max_abs_diff(const Matrix& x, const Matrix& y) {
  if (x.n != y.n) throw Error(ErrorCode::DimMismatch, "matrix difference dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < x.a.size(); ++i) s = std::max(s, std::abs(x.a[i] - y.a[i]));
  return s;
}

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.a) s += v * v;
  return std::sqrt(s);
}

inline double max_asymmetry(const Matrix& m) {
  double s = 0.0;
  for (int i = 0; i < m.n; ++i)
    for (int j = i + 1; j < m.n; ++j) s = std::max(s, std::abs(m(i, j) - m(j, i)));
  return s;
}

/// v v^T
inline Matrix outer_product(const std::vector<double>& v) {
  Matrix r(static_cast<int>(v.size()));
  for (int i = 0; i < r.n; ++i)
    for (int j = 0; j < r.n; ++j) r(i, j) = v[i] * v[j];
  return r;
}

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::DimMismatch, "dot product dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double squared_norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

/// Column j as a vector.
inline std::vector<double> column(const Matrix& m, int j) {
  std::vector<double> c(static_cast<std::size_t>(m.n));
  for (int i = 0; i < m.n; ++i) c[i] = m(i, j);
  return c;
}

}  // namespace pcsft
