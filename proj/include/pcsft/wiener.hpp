#pragma once

#include <cmath>
#include <ostream>
#include <utility>
#include <vector>

#include "pcsft/core_types.hpp"
#include "pcsft/error.hpp"
#include "pcsft/matrix.hpp"
#include "pcsft/rng.hpp"

namespace pcsft {

/// One Gaussian increment over dt: A z sqrt(dt) with z standard normal, so the
/// increment has mean zero and covariance dt * A A^T.
inline FieldVector sample_increment(const Matrix& chol_factor, double dt, RngStream& rng) {
  const int m = chol_factor.dim();
  const double root_dt = std::sqrt(dt);
  std::vector<double> z(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) z[i] = rng.next_normal();
  FieldVector inc(m);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int k = 0; k <= i; ++k) s += chol_factor(i, k) * z[k];
    inc[i] = s * root_dt;
  }
  return inc;
}

/// Streaming source of field increments. Reuses internal buffers, so the
/// reference returned by next() is only valid until the following call.
class GaussianIncrementSource {
 public:
  GaussianIncrementSource(Matrix chol_factor, double dt, RngStream rng)
      : a_(std::move(chol_factor)),
        dt_(dt),
        root_dt_(std::sqrt(dt)),
        rng_(rng),
        z_(static_cast<std::size_t>(a_.dim())),
        inc_(static_cast<std::size_t>(a_.dim())) {
    if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveStep, "dt must be positive");
  }

  int dim() const { return a_.dim(); }
  double step_dt() const { return dt_; }

  const std::vector<double>& next() {
    const int m = a_.dim();
    for (int i = 0; i < m; ++i) z_[i] = rng_.next_normal();
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int k = 0; k <= i; ++k) s += a_(i, k) * z_[k];
      inc_[i] = s * root_dt_;
    }
    return inc_;
  }

 private:
  Matrix a_;
  double dt_;
  double root_dt_;
  RngStream rng_;
  std::vector<double> z_;
  std::vector<double> inc_;
};

/// Wraps an increment source and applies a fixed linear map to every
/// increment. Used for measuring the field in a rotated basis (phi -> U^T phi).
template <class Source>
class RotatedIncrementSource {
 public:
  RotatedIncrementSource(Source inner, Matrix rotation_transposed)
      : inner_(std::move(inner)),
        rt_(std::move(rotation_transposed)),
        out_(static_cast<std::size_t>(rt_.dim())) {
    if (rt_.dim() != inner_.dim())
      throw Error(ErrorCode::DimMismatch, "rotation dimension does not match source");
  }

  int dim() const { return inner_.dim(); }
  double step_dt() const { return inner_.step_dt(); }

  const std::vector<double>& next() {
    const auto& inc = inner_.next();
    const int m = rt_.dim();
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += rt_(i, j) * inc[j];
      out_[i] = s;
    }
    return out_;
  }

 private:
  Source inner_;
  Matrix rt_;
  std::vector<double> out_;
};

/// Discretized Wiener path: samples at s_i = i * dt starting from the zero field.
struct FieldTrajectory {
  double dt = 0.0;
  std::vector<FieldVector> samples;

  int dim() const { return samples.empty() ? 0 : samples.front().dim(); }
  double time_of(std::size_t i) const { return static_cast<double>(i) * dt; }
};

/// Cumulative sum of exact Gaussian increments; floor(T/dt) + 1 samples.
/// Deterministic given (B, dt, T, rng stream).
inline FieldTrajectory generate_path(const CovarianceOperator& b, double dt, double duration,
                                     RngStream rng) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveStep, "dt must be positive");
  if (duration < dt) throw Error(ErrorCode::BadArgs, "duration must be at least one step");
  const Matrix a = cholesky(b);
  const int m = b.dim();
  const auto n_steps = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));

  FieldTrajectory path;
  path.dt = dt;
  path.samples.reserve(n_steps + 1);
  path.samples.emplace_back(m);

  GaussianIncrementSource src(a, dt, rng);
  FieldVector current(m);
  for (std::size_t i = 0; i < n_steps; ++i) {
    const auto& inc = src.next();
    for (int k = 0; k < m; ++k) current[k] += inc[k];
    path.samples.push_back(current);
  }
  return path;
}

/// Replays the increments of a stored trajectory; handy for feeding a
/// detector a known path in tests.
class TrajectorySource {
 public:
  explicit TrajectorySource(const FieldTrajectory& path)
      : path_(&path), inc_(static_cast<std::size_t>(path.dim())) {}

  int dim() const { return path_->dim(); }
  double step_dt() const { return path_->dt; }

  const std::vector<double>& next() {
    const auto& prev = path_->samples[pos_];
    const auto& cur = path_->samples[pos_ + 1];
    for (int k = 0; k < dim(); ++k) inc_[k] = cur[k] - prev[k];
    ++pos_;
    return inc_;
  }

  bool exhausted() const { return pos_ + 1 >= path_->samples.size(); }

 private:
  const FieldTrajectory* path_;
  std::vector<double> inc_;
  std::size_t pos_ = 0;
};

/// Debug dump: header "s,phi_1,...,phi_m", one row per sample.
inline void write_path_csv(std::ostream& os, const FieldTrajectory& path) {
  os << "s";
  for (int k = 1; k <= path.dim(); ++k) os << ",phi_" << k;
  os << "\n";
  for (std::size_t i = 0; i < path.samples.size(); ++i) {
    os << path.time_of(i);
    for (int k = 0; k < path.dim(); ++k) os << "," << path.samples[i][k];
    os << "\n";
  }
}

}  // namespace pcsft
