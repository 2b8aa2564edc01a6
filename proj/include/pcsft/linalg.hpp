#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pcsft/error.hpp"
#include "pcsft/matrix.hpp"

namespace pcsft {

/// Eigenvalues ascending, eigenvectors the matching orthonormal columns of Q.
struct SpectralDecomposition {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;

  int dim() const { return eigenvectors.dim(); }

  /// Q diag(w) Q^T, for residual checks.
  Matrix reconstruct() const {
    const int n = dim();
    Matrix r(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += eigenvectors(i, k) * eigenvalues[k] * eigenvectors(j, k);
        r(i, j) = s;
      }
    return r;
  }
};

namespace detail {

inline double off_diagonal_norm(const Matrix& m) {
  double s = 0.0;
  for (int i = 0; i < m.n; ++i)
    for (int j = i + 1; j < m.n; ++j) s += 2.0 * m(i, j) * m(i, j);
  return std::sqrt(s);
}

}  // namespace detail

/// Cyclic Jacobi rotations on a symmetric matrix. Converges when the
/// off-diagonal Frobenius norm drops below 1e-12 * ||L||_F; at most 100 sweeps.
/// Eigenvalues come back ascending and each eigenvector has its first
/// nonzero component positive, so repeated runs produce identical output.
inline SpectralDecomposition spectral_decompose(const Matrix& l) {
  const int n = l.dim();
  if (n == 0) throw Error(ErrorCode::BadArgs, "empty matrix");
  const double scale = max_abs(l);
  if (max_asymmetry(l) > 1e-12 * std::max(scale, 1e-300))
    throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric within 1e-12 relative tolerance");

  Matrix a = l;
  Matrix q = Matrix::identity(n);
  const double target = 1e-12 * frobenius_norm(l);

  bool converged = (detail::off_diagonal_norm(a) <= target);
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int r = p + 1; r < n; ++r) {
        const double apr = a(p, r);
        if (apr == 0.0) continue;
        const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        const double h = t * apr;

        a(p, p) -= h;
        a(r, r) += h;
        a(p, r) = 0.0;
        a(r, p) = 0.0;
        for (int i = 0; i < n; ++i) {
          if (i == p || i == r) continue;
          const double aip = a(i, p);
          const double air = a(i, r);
          a(i, p) = aip - s * (air + tau * aip);
          a(p, i) = a(i, p);
          a(i, r) = air + s * (aip - tau * air);
          a(r, i) = a(i, r);
        }
        for (int i = 0; i < n; ++i) {
          const double qip = q(i, p);
          const double qir = q(i, r);
          q(i, p) = qip - s * (qir + tau * qip);
          q(i, r) = qir + s * (qip - tau * qir);
        }
      }
    }
    converged = (detail::off_diagonal_norm(a) <= target);
  }
  if (!converged)
    throw Error(ErrorCode::NoConvergence, "Jacobi iteration did not converge in 100 sweeps");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return a(x, x) < a(y, y); });

  SpectralDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n);
  for (int k = 0; k < n; ++k) {
    const int src = order[k];
    out.eigenvalues[k] = a(src, src);
    double colmax = 0.0;
    for (int i = 0; i < n; ++i) colmax = std::max(colmax, std::abs(q(i, src)));
    double sign = 1.0;
    for (int i = 0; i < n; ++i) {
      if (std::abs(q(i, src)) > 1e-12 * colmax) {
        sign = q(i, src) > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (int i = 0; i < n; ++i) out.eigenvectors(i, k) = sign * q(i, src);
  }
  return out;
}

/// Lower-triangular A with A A^T = B for symmetric positive-semidefinite B.
/// Pivots below `pivot_tol` produce a zero column, so rank-deficient input is
/// accepted; a pivot below -pivot_tol raises NotPSD.
inline Matrix cholesky_semidefinite(const Matrix& b, double pivot_tol) {
  const int n = b.dim();
  Matrix a(n);
  for (int j = 0; j < n; ++j) {
    double d = b(j, j);
    for (int k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (d < -pivot_tol)
      throw Error(ErrorCode::NotPSD, "negative pivot in Cholesky factorization");
    if (d <= pivot_tol) {
      for (int i = j; i < n; ++i) a(i, j) = 0.0;
      continue;
    }
    const double root = std::sqrt(d);
    a(j, j) = root;
    for (int i = j + 1; i < n; ++i) {
      double s = b(i, j);
      for (int k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / root;
    }
  }
  return a;
}

}  // namespace pcsft
