#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pcsft/core_types.hpp"
#include "pcsft/error.hpp"

namespace pcsft {

enum class CrossingRule { grid, interpolated };
enum class DetectionMode { renewal, windowed };

/// @brief Threshold detector settings.
///
/// A detector clicks at the first time its channel energy reaches the
/// threshold. In renewal mode the clicked channel restarts from the zero
/// field after dead_time and counting continues; with global_reset every
/// channel restarts on any click. In windowed mode a run covers one trial and
/// each channel reports at most its first hit.
struct DetectorConfig {
  double threshold = 1.0;
  double dead_time = 0.0;
  CrossingRule crossing_rule = CrossingRule::interpolated;
  DetectionMode mode = DetectionMode::renewal;
  bool global_reset = false;
};

/// Maps channels to disjoint sets of field components. Singleton sets for
/// plain real channels; pairs when two real components encode one complex one.
struct ChannelAssignment {
  std::vector<std::vector<int>> components;

  static ChannelAssignment singletons(int dim) {
    ChannelAssignment a;
    a.components.resize(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) a.components[i] = {i};
    return a;
  }

  /// Channel j owns components (2j, 2j+1).
  static ChannelAssignment pairs(int dim) {
    if (dim % 2 != 0) throw Error(ErrorCode::BadArgs, "pair assignment needs even dimension");
    ChannelAssignment a;
    a.components.resize(static_cast<std::size_t>(dim / 2));
    for (int j = 0; j < dim / 2; ++j) a.components[j] = {2 * j, 2 * j + 1};
    return a;
  }

  int channel_count() const { return static_cast<int>(components.size()); }

  void validate(int dim) const {
    std::vector<char> seen(static_cast<std::size_t>(dim), 0);
    if (components.empty()) throw Error(ErrorCode::BadChannel, "no channels assigned");
    for (const auto& ch : components) {
      if (ch.empty()) throw Error(ErrorCode::BadChannel, "channel with no components");
      for (int c : ch) {
        if (c < 0 || c >= dim) throw Error(ErrorCode::BadChannel, "component index out of range");
        if (seen[static_cast<std::size_t>(c)])
          throw Error(ErrorCode::BadChannel, "channels must be disjoint");
        seen[static_cast<std::size_t>(c)] = 1;
      }
    }
  }
};

struct ClickRecord {
  int channel = 0;
  double time = 0.0;
  double excursion_start = 0.0;  // when this channel last restarted from the zero field
};

/// Sum of squares of the channel's components.
inline double channel_energy(const FieldVector& phi, const ChannelAssignment& assignment,
                             int channel) {
  if (channel < 0 || channel >= assignment.channel_count())
    throw Error(ErrorCode::BadChannel, "channel index out of range");
  double e = 0.0;
  for (int c : assignment.components[static_cast<std::size_t>(channel)]) {
    if (c < 0 || c >= phi.dim()) throw Error(ErrorCode::BadChannel, "component index out of range");
    e += phi[c] * phi[c];
  }
  return e;
}

/// First time the sampled energy sequence reaches the threshold, or nothing.
/// Grid rule returns the first sample time at or above the threshold; the
/// interpolated rule places the crossing linearly in energy between the
/// straddling samples.
inline std::optional<double> first_hit(std::span<const std::pair<double, double>> energies,
                                       double threshold, CrossingRule rule) {
  double prev_s = 0.0;
  double prev_e = 0.0;
  bool have_prev = false;
  for (const auto& [s, e] : energies) {
    if (e >= threshold) {
      if (rule == CrossingRule::grid || !have_prev) return s;
      const double denom = e - prev_e;
      if (denom <= 0.0) return s;
      return prev_s + (s - prev_s) * (threshold - prev_e) / denom;
    }
    prev_s = s;
    prev_e = e;
    have_prev = true;
  }
  return std::nullopt;
}

/// Clicks recorded by one detector run.
struct DetectorRun {
  std::vector<std::vector<ClickRecord>> clicks;  // indexed by channel
  std::uint64_t steps = 0;

  long total_clicks() const {
    long n = 0;
    for (const auto& ch : clicks) n += static_cast<long>(ch.size());
    return n;
  }
};

/// @brief Drives threshold detectors over a stream of field increments.
///
/// Channels accumulate their components of each increment and are checked
/// against the threshold once per step; crossings within a step are resolved
/// simultaneously for all channels before any reset is applied. A channel in
/// its dead window is held at the zero field and skips detection.
template <class Source>
DetectorRun run_detector(Source& src, const ChannelAssignment& assignment,
                         const DetectorConfig& cfg, double duration) {
  if (!(cfg.threshold > 0.0)) throw Error(ErrorCode::ZeroThreshold, "threshold must be positive");
  if (!(duration > 0.0)) throw Error(ErrorCode::BadArgs, "duration must be positive");
  assignment.validate(src.dim());

  const double dt = src.step_dt();
  const int nch = assignment.channel_count();
  const auto n_steps = static_cast<std::int64_t>(std::floor(duration / dt + 1e-9));

  DetectorRun run;
  run.clicks.resize(static_cast<std::size_t>(nch));

  std::vector<double> comp(static_cast<std::size_t>(src.dim()), 0.0);
  std::vector<double> energy(static_cast<std::size_t>(nch), 0.0);
  std::vector<double> prev_energy(static_cast<std::size_t>(nch), 0.0);
  std::vector<double> excursion_start(static_cast<std::size_t>(nch), 0.0);
  std::vector<std::int64_t> resume_step(static_cast<std::size_t>(nch), 0);
  std::vector<char> done(static_cast<std::size_t>(nch), 0);
  std::vector<int> pending;
  int n_done = 0;

  const bool windowed = cfg.mode == DetectionMode::windowed;

  for (std::int64_t i = 1; i <= n_steps; ++i) {
    const double s = static_cast<double>(i) * dt;
    const auto& inc = src.next();
    ++run.steps;

    pending.clear();
    for (int j = 0; j < nch; ++j) {
      if (windowed && done[j]) continue;
      if (!windowed && i <= resume_step[j]) continue;  // dead window, field held at zero
      double e = 0.0;
      for (int c : assignment.components[static_cast<std::size_t>(j)]) {
        comp[static_cast<std::size_t>(c)] += inc[static_cast<std::size_t>(c)];
        const double v = comp[static_cast<std::size_t>(c)];
        e += v * v;
      }
      energy[static_cast<std::size_t>(j)] = e;
      if (e >= cfg.threshold) pending.push_back(j);
    }

    for (int j : pending) {
      const double e = energy[static_cast<std::size_t>(j)];
      const double ep = prev_energy[static_cast<std::size_t>(j)];
      double tau = s;
      if (cfg.crossing_rule == CrossingRule::interpolated && e > ep)
        tau = (s - dt) + dt * (cfg.threshold - ep) / (e - ep);
      run.clicks[static_cast<std::size_t>(j)].push_back(
          {j, tau, excursion_start[static_cast<std::size_t>(j)]});

      if (windowed) {
        done[static_cast<std::size_t>(j)] = 1;
        ++n_done;
        continue;
      }
      for (int c : assignment.components[static_cast<std::size_t>(j)])
        comp[static_cast<std::size_t>(c)] = 0.0;
      prev_energy[static_cast<std::size_t>(j)] = 0.0;
      energy[static_cast<std::size_t>(j)] = 0.0;
      const double resume_time = std::max(s, tau + cfg.dead_time);
      resume_step[static_cast<std::size_t>(j)] =
          static_cast<std::int64_t>(std::ceil(resume_time / dt - 1e-9));
      excursion_start[static_cast<std::size_t>(j)] =
          static_cast<double>(resume_step[static_cast<std::size_t>(j)]) * dt;
    }

    if (!windowed && cfg.global_reset && !pending.empty()) {
      // A click drains the whole field; every channel restarts from zero.
      std::fill(comp.begin(), comp.end(), 0.0);
      std::fill(prev_energy.begin(), prev_energy.end(), 0.0);
      std::fill(energy.begin(), energy.end(), 0.0);
      for (int j = 0; j < nch; ++j)
        if (i > resume_step[static_cast<std::size_t>(j)])
          excursion_start[static_cast<std::size_t>(j)] = s;
    } else {
      for (int j = 0; j < nch; ++j) {
        if (windowed && done[j]) continue;
        if (!windowed && i <= resume_step[j]) continue;
        prev_energy[static_cast<std::size_t>(j)] = energy[static_cast<std::size_t>(j)];
      }
    }

    if (windowed && n_done == nch) break;
  }
  return run;
}

/// Number of matched click pairs with |t - u| <= window, each click used at
/// most once, matched greedily earliest first.
inline std::size_t find_coincidences(const std::vector<double>& channel1,
                                     const std::vector<double>& channel2, double window) {
  if (window < 0.0) throw Error(ErrorCode::BadArgs, "coincidence window must be nonnegative");
  std::size_t i = 0, j = 0, count = 0;
  while (i < channel1.size() && j < channel2.size()) {
    const double d = channel1[i] - channel2[j];
    if (std::abs(d) <= window) {
      ++count;
      ++i;
      ++j;
    } else if (d < 0.0) {
      ++i;
    } else {
      ++j;
    }
  }
  return count;
}

}  // namespace pcsft
