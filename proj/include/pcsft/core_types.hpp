#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "pcsft/error.hpp"
#include "pcsft/linalg.hpp"
#include "pcsft/matrix.hpp"

namespace pcsft {

/// Field state: m real components in units of sqrt(energy).
struct FieldVector {
  std::vector<double> c;

  FieldVector() = default;
  explicit FieldVector(int dim) : c(static_cast<std::size_t>(dim), 0.0) {}
  explicit FieldVector(std::vector<double> components) : c(std::move(components)) {}
  FieldVector(std::initializer_list<double> components) : c(components) {}

  int dim() const { return static_cast<int>(c.size()); }
  double energy() const { return squared_norm(c); }

  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  bool finite() const {
    for (double v : c)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

/// @brief Covariance operator of the field process: symmetric PSD, units of power.
///
/// Construction mirrors the lower triangle onto the upper one so the stored
/// matrix is exactly symmetric, rejects input that is asymmetric beyond
/// rounding, checks positive semidefiniteness against a trace-scaled
/// tolerance, and requires a positive trace.
class CovarianceOperator {
 public:
  explicit CovarianceOperator(Matrix m) : b_(std::move(m)) {
    const double scale = max_abs(b_);
    if (max_asymmetry(b_) > 1e-9 * std::max(scale, 1e-300))
      throw Error(ErrorCode::NotSymmetric, "covariance matrix is not symmetric");
    for (int i = 0; i < b_.n; ++i)
      for (int j = 0; j < i; ++j) b_(j, i) = b_(i, j);
    trace_ = pcsft::trace(b_);
    if (!(trace_ > 0.0)) throw Error(ErrorCode::ZeroTrace, "covariance trace must be positive");
    const auto eig = spectral_decompose(b_);
    if (eig.eigenvalues.front() < -psd_tolerance())
      throw Error(ErrorCode::NotPSD, "covariance matrix has a negative eigenvalue");
  }

  int dim() const { return b_.dim(); }
  double trace() const { return trace_; }
  double psd_tolerance() const { return 1e-10 * trace_; }
  double operator()(int i, int j) const { return b_(i, j); }
  const Matrix& entries() const { return b_; }

 private:
  Matrix b_;
  double trace_ = 0.0;
};

/// Emergent quantum state: symmetric PSD with unit trace, dimensionless.
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix m) : rho_(std::move(m)) {
    const double scale = max_abs(rho_);
    if (max_asymmetry(rho_) > 1e-9 * std::max(scale, 1e-300))
      throw Error(ErrorCode::NotSymmetric, "density matrix is not symmetric");
    for (int i = 0; i < rho_.n; ++i)
      for (int j = 0; j < i; ++j) rho_(j, i) = rho_(i, j);
    const double tr = pcsft::trace(rho_);
    if (std::abs(tr - 1.0) > 1e-12)
      throw Error(ErrorCode::BadArgs, "density matrix trace must be 1");
    const auto eig = spectral_decompose(rho_);
    if (eig.eigenvalues.front() < -1e-10)
      throw Error(ErrorCode::NotPSD, "density matrix has a negative eigenvalue");
  }

  int dim() const { return rho_.dim(); }
  double operator()(int i, int j) const { return rho_(i, j); }
  const Matrix& entries() const { return rho_; }

 private:
  Matrix rho_;
};

/// Orthogonal projector: symmetric and idempotent.
class Projector {
 public:
  explicit Projector(Matrix m) : p_(std::move(m)) {
    const double scale = std::max(max_abs(p_), 1e-300);
    if (max_asymmetry(p_) > 1e-9 * scale)
      throw Error(ErrorCode::NotSymmetric, "projector is not symmetric");
    for (int i = 0; i < p_.n; ++i)
      for (int j = 0; j < i; ++j) p_(j, i) = p_(i, j);
    if (max_abs_diff(p_ * p_, p_) > 1e-10)
      throw Error(ErrorCode::BadArgs, "projector is not idempotent");
  }

  /// |e_j><e_j| in an m-dimensional space.
  static Projector onto_axis(int dim, int axis) {
    if (axis < 0 || axis >= dim) throw Error(ErrorCode::BadArgs, "projector axis out of range");
    Matrix m(dim);
    m(axis, axis) = 1.0;
    return Projector(std::move(m));
  }

  /// Rank-one projector onto the direction of v.
  static Projector onto_direction(const std::vector<double>& v) {
    const double n2 = squared_norm(v);
    if (!(n2 > 0.0)) throw Error(ErrorCode::ZeroField, "cannot project onto the zero vector");
    Matrix m = outer_product(v);
    for (double& x : m.a) x /= n2;
    return Projector(std::move(m));
  }

  static Projector identity(int dim) { return Projector(Matrix::identity(dim)); }

  int dim() const { return p_.dim(); }
  double operator()(int i, int j) const { return p_(i, j); }
  const Matrix& entries() const { return p_; }

 private:
  Matrix p_;
};

/// rho = B / Tr B. The division by the trace makes the result scale free.
inline DensityMatrix density_from_covariance(const CovarianceOperator& b) {
  Matrix m = b.entries();
  const double tr = b.trace();
  for (double& x : m.a) x /= tr;
  return DensityMatrix(std::move(m));
}

/// Tr(rho C), clamped to [0,1] after roundoff.
inline double born_probability(const DensityMatrix& rho, const Projector& c) {
  if (rho.dim() != c.dim())
    throw Error(ErrorCode::DimMismatch, "density matrix and projector dimensions differ");
  double s = 0.0;
  for (int i = 0; i < rho.dim(); ++i)
    for (int j = 0; j < rho.dim(); ++j) s += rho(i, j) * c(i, j);
  return std::clamp(s, 0.0, 1.0);
}

/// Lower-triangular A with A A^T = B, zero columns where B is rank deficient.
/// Deterministic: no randomness enters the factorization.
inline Matrix cholesky(const CovarianceOperator& b) {
  return cholesky_semidefinite(b.entries(), b.psd_tolerance());
}

}  // namespace pcsft
