#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "pcsft/core_types.hpp"
#include "pcsft/error.hpp"
#include "pcsft/linalg.hpp"
#include "pcsft/matrix.hpp"

namespace pcsft {

enum class EvolutionMode { plain, unitary };

/// Linear field dynamics defined by a symmetric generator. Plain mode grows
/// or damps each eigenmode exponentially; unitary mode rotates each mode's
/// phase at its eigenfrequency, preserving every mode amplitude.
class ModeSystem {
 public:
  ModeSystem(Matrix generator, EvolutionMode mode)
      : generator_(std::move(generator)), mode_(mode), decomposition_(spectral_decompose(generator_)) {}

  int dim() const { return generator_.dim(); }
  EvolutionMode mode() const { return mode_; }
  const Matrix& generator() const { return generator_; }
  const SpectralDecomposition& decomposition() const { return decomposition_; }

 private:
  Matrix generator_;
  EvolutionMode mode_;
  SpectralDecomposition decomposition_;
};

/// @brief Field expanded over eigenmodes after evolving for time t.
///
/// Plain mode keeps real coefficients and an m-dimensional field. Unitary
/// mode tracks each mode as an amplitude-preserving planar rotation
/// (coef_re, coef_im); its field uses the 2m-dimensional real encoding with
/// component pair (2j, 2j+1) holding the two quadratures of component j.
struct EvolvedField {
  double t = 0.0;
  EvolutionMode mode = EvolutionMode::plain;
  std::vector<double> coef_re;
  std::vector<double> coef_im;
  FieldVector field;

  double norm() const {
    double s = 0.0;
    for (std::size_t k = 0; k < coef_re.size(); ++k)
      s += coef_re[k] * coef_re[k] + coef_im[k] * coef_im[k];
    return std::sqrt(s);
  }
};

/// Evolve phi0 for time t. Plain mode: c_k(t) = exp(w_k t) c_k(0). Unitary
/// mode: c_k(t) rotates by angle w_k t, so |c_k(t)| = |c_k(0)| for every mode.
inline EvolvedField evolve(const ModeSystem& sys, const FieldVector& phi0, double t) {
  if (phi0.dim() != sys.dim())
    throw Error(ErrorCode::DimMismatch, "field dimension does not match generator");
  if (t < 0.0) throw Error(ErrorCode::NegativeTime, "evolution time must be nonnegative");

  const auto& dec = sys.decomposition();
  const int m = sys.dim();

  std::vector<double> c0(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) c0[k] = dot(column(dec.eigenvectors, k), phi0.c);

  EvolvedField out;
  out.t = t;
  out.mode = sys.mode();
  out.coef_re.resize(static_cast<std::size_t>(m));
  out.coef_im.assign(static_cast<std::size_t>(m), 0.0);

  if (sys.mode() == EvolutionMode::plain) {
    for (int k = 0; k < m; ++k) out.coef_re[k] = std::exp(dec.eigenvalues[k] * t) * c0[k];
    out.field = FieldVector(m);
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int k = 0; k < m; ++k) s += dec.eigenvectors(i, k) * out.coef_re[k];
      out.field[i] = s;
    }
    return out;
  }

  for (int k = 0; k < m; ++k) {
    const double angle = dec.eigenvalues[k] * t;
    out.coef_re[k] = std::cos(angle) * c0[k];
    out.coef_im[k] = -std::sin(angle) * c0[k];
  }
  out.field = FieldVector(2 * m);
  for (int i = 0; i < m; ++i) {
    double re = 0.0, im = 0.0;
    for (int k = 0; k < m; ++k) {
      re += dec.eigenvectors(i, k) * out.coef_re[k];
      im += dec.eigenvectors(i, k) * out.coef_im[k];
    }
    out.field[2 * i] = re;
    out.field[2 * i + 1] = im;
  }
  return out;
}

/// P phi. The result keeps its raw scale; components are not normalized.
inline FieldVector project_component(const FieldVector& phi, const Projector& p) {
  if (phi.dim() != p.dim())
    throw Error(ErrorCode::DimMismatch, "field dimension does not match projector");
  return FieldVector(mat_vec(p.entries(), phi.c));
}

/// Energy carried by a component wave: its squared norm.
inline double component_energy(const FieldVector& phi) { return phi.energy(); }

namespace detail {

inline void require_orthonormal(const Matrix& basis) {
  const Matrix gram = transpose(basis) * basis;
  if (max_abs_diff(gram, Matrix::identity(basis.dim())) > 1e-10)
    throw Error(ErrorCode::NotOrthonormal, "basis columns are not orthonormal");
}

}  // namespace detail

/// Share of the field energy in each basis direction. Entries sum to one;
/// scaling the field does not change them.
inline std::vector<double> relative_energies(const FieldVector& phi, const Matrix& basis) {
  if (phi.dim() != basis.dim())
    throw Error(ErrorCode::DimMismatch, "field dimension does not match basis");
  if (!(phi.energy() > 0.0)) throw Error(ErrorCode::ZeroField, "field has zero energy");
  detail::require_orthonormal(basis);

  const int m = basis.dim();
  std::vector<double> energies(static_cast<std::size_t>(m));
  double total = 0.0;
  for (int k = 0; k < m; ++k) {
    double o = 0.0;
    for (int i = 0; i < m; ++i) o += basis(i, k) * phi[i];
    energies[k] = o * o;
    total += energies[k];
  }
  for (double& e : energies) e /= total;
  return energies;
}

/// The collapsed state without selection: sum_k (E_k / E_phi) |q_k><q_k|,
/// diagonal in the given basis with the relative energies on the diagonal.
inline DensityMatrix decoherent_mixture(const FieldVector& phi, const Matrix& basis) {
  const auto weights = relative_energies(phi, basis);
  const int m = basis.dim();
  Matrix rho(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int k = 0; k < m; ++k) s += weights[k] * basis(i, k) * basis(j, k);
      rho(i, j) = s;
    }
  // Mirror to kill rounding asymmetry, then renormalize the trace: basis
  // columns are only orthonormal to tolerance, the state must have trace 1.
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < i; ++j) rho(j, i) = rho(i, j);
  const double tr = trace(rho);
  for (double& x : rho.a) x /= tr;
  return DensityMatrix(std::move(rho));
}

}  // namespace pcsft
