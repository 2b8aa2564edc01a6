#pragma once

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pcsft/core_types.hpp"
#include "pcsft/detector.hpp"
#include "pcsft/error.hpp"
#include "pcsft/matrix.hpp"
#include "pcsft/oracle.hpp"
#include "pcsft/rng.hpp"
#include "pcsft/stats.hpp"
#include "pcsft/wiener.hpp"

namespace pcsft {

/// @brief Full description of one Monte Carlo campaign.
///
/// T is the duration per trial in windowed mode and the total duration in
/// renewal mode. Renewal runs may be split into n_chunks independent segments
/// (each restarting from the zero field) so they can execute in parallel;
/// the chunk count is part of the experiment definition, which is why results
/// never depend on the thread count.
struct ExperimentConfig {
  CovarianceOperator B;
  DetectorConfig detector;
  double dt = 1e-3;
  double T = 1.0;
  long n_trials = 1;
  std::uint64_t master_seed = 1;
  std::optional<Matrix> measurement_basis;  // columns are the measured directions
  double coincidence_window = -1.0;         // negative: defaults to dt
  std::optional<ChannelAssignment> channels;
  int n_chunks = 1;
  int threads = 1;
  int pair_a = 0;
  int pair_b = 1;

  explicit ExperimentConfig(CovarianceOperator b) : B(std::move(b)) {}

  double window() const { return coincidence_window < 0.0 ? dt : coincidence_window; }
  ChannelAssignment assignment() const {
    return channels ? *channels : ChannelAssignment::singletons(B.dim());
  }
};

struct ChannelStats {
  int channel = 0;
  long count = 0;
  double p = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double reference = 0.0;
  bool has_reference = false;
  bool pass = false;
  double mean_tau = 0.0;
  long tau_count = 0;
};

struct PairStats {
  double p1 = 0.0;
  double p2 = 0.0;
  double p12 = 0.0;
  bool g2_defined = false;
  double g2 = 0.0;
  double g2_low = 0.0;
  double g2_high = 0.0;
};

struct ExperimentStats {
  std::string kind;            // "singles" or "coincidence"
  std::string detection_mode;  // "renewal" or "windowed"
  long n_trials = 0;           // windowed runs only
  long total_clicks = 0;
  std::vector<ChannelStats> channels;
  std::optional<PairStats> pair;
  std::uint64_t steps = 0;
  double wall_ms = 0.0;  // excluded from result files: outputs must be byte-reproducible
  std::vector<std::string> notes;
};

namespace detail {

// Stream tags. Singles streams do not depend on the threshold, so matched
// seeds give matched paths across thresholds (and across the exact scaling
// (B, E_d) -> (cB, cE_d)). Coincidence streams fold the threshold bits in,
// which makes every sweep row reproducible in isolation.
inline constexpr std::uint64_t kSinglesChunk = 1;
inline constexpr std::uint64_t kSinglesTrial = 2;
inline constexpr std::uint64_t kCoincChunk = 3;
inline constexpr std::uint64_t kCoincTrial = 4;

inline std::uint64_t threshold_bits(double threshold) {
  return std::bit_cast<std::uint64_t>(threshold);
}

template <class Fn>
void parallel_blocks(long n_blocks, int threads, Fn&& fn) {
  if (threads <= 1 || n_blocks <= 1) {
    for (long b = 0; b < n_blocks; ++b) fn(b);
    return;
  }
  std::atomic<long> next{0};
  auto worker = [&] {
    for (;;) {
      const long b = next.fetch_add(1);
      if (b >= n_blocks) return;
      fn(b);
    }
  };
  std::vector<std::thread> pool;
  const int extra = threads - 1;
  pool.reserve(static_cast<std::size_t>(extra));
  for (int i = 0; i < extra; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

// Gaussian increments, optionally re-expressed in a rotated measurement
// basis (phi -> U^T phi applied increment-wise).
class FieldSource {
 public:
  FieldSource(const Matrix& chol, const Matrix* u_transposed, double dt, RngStream rng)
      : inner_(chol, dt, rng), rt_(u_transposed) {
    if (rt_) out_.resize(static_cast<std::size_t>(inner_.dim()));
  }

  int dim() const { return inner_.dim(); }
  double step_dt() const { return inner_.step_dt(); }

  const std::vector<double>& next() {
    const auto& inc = inner_.next();
    if (!rt_) return inc;
    const int m = inner_.dim();
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += (*rt_)(i, j) * inc[j];
      out_[i] = s;
    }
    return out_;
  }

 private:
  GaussianIncrementSource inner_;
  const Matrix* rt_;
  std::vector<double> out_;
};

struct ResolvedRun {
  Matrix chol;
  std::optional<Matrix> u_transposed;
  Matrix effective_b;  // U^T B U when a basis is set, otherwise B
  ChannelAssignment assignment;
};

inline ResolvedRun resolve(const ExperimentConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw Error(ErrorCode::NonPositiveStep, "dt must be positive");
  if (cfg.dt > cfg.T) throw Error(ErrorCode::BadConfig, "dt must not exceed T");
  if (cfg.n_trials < 1) throw Error(ErrorCode::BadConfig, "n_trials must be at least 1");
  if (cfg.n_chunks < 1) throw Error(ErrorCode::BadConfig, "n_chunks must be at least 1");
  if (cfg.threads < 1) throw Error(ErrorCode::BadConfig, "threads must be at least 1");
  if (!(cfg.detector.threshold > 0.0))
    throw Error(ErrorCode::ZeroThreshold, "detector.threshold must be positive");
  if (cfg.detector.dead_time < 0.0)
    throw Error(ErrorCode::BadConfig, "detector.dead_time must be nonnegative");

  ResolvedRun r{cholesky(cfg.B), std::nullopt, cfg.B.entries(), cfg.assignment()};
  r.assignment.validate(cfg.B.dim());
  if (cfg.measurement_basis) {
    const Matrix& u = *cfg.measurement_basis;
    if (u.dim() != cfg.B.dim())
      throw Error(ErrorCode::DimMismatch, "measurement_basis dimension does not match B");
    const Matrix ut = transpose(u);
    if (max_abs_diff(ut * u, Matrix::identity(u.dim())) > 1e-10)
      throw Error(ErrorCode::NotOrthonormal, "measurement_basis columns are not orthonormal");
    r.u_transposed = ut;
    r.effective_b = ut * (cfg.B.entries() * u);
  }
  return r;
}

inline double channel_power(const ResolvedRun& r, int channel) {
  double p = 0.0;
  for (int c : r.assignment.components[static_cast<std::size_t>(channel)])
    p += r.effective_b(c, c);
  return p;
}

struct ChunkTally {
  std::vector<long> counts;
  std::vector<double> tau_sum;
  std::vector<long> tau_count;
  std::vector<double> clicks_a;  // pair channel click times (coincidence runs)
  std::vector<double> clicks_b;
  std::uint64_t steps = 0;
};

// One renewal segment of duration chunk_t, starting from the zero field.
inline ChunkTally run_renewal_chunk(const ExperimentConfig& cfg, const ResolvedRun& r,
                                    std::uint64_t stream_id, double chunk_t, bool keep_pair) {
  RngStream rng(cfg.master_seed, stream_id);
  FieldSource src(r.chol, r.u_transposed ? &*r.u_transposed : nullptr, cfg.dt, rng);
  const auto run = run_detector(src, r.assignment, cfg.detector, chunk_t);

  const int nch = r.assignment.channel_count();
  ChunkTally tally;
  tally.counts.assign(static_cast<std::size_t>(nch), 0);
  tally.tau_sum.assign(static_cast<std::size_t>(nch), 0.0);
  tally.tau_count.assign(static_cast<std::size_t>(nch), 0);
  tally.steps = run.steps;
  for (int j = 0; j < nch; ++j) {
    const auto& clicks = run.clicks[static_cast<std::size_t>(j)];
    tally.counts[static_cast<std::size_t>(j)] = static_cast<long>(clicks.size());
    for (const auto& c : clicks) {
      tally.tau_sum[static_cast<std::size_t>(j)] += c.time - c.excursion_start;
      ++tally.tau_count[static_cast<std::size_t>(j)];
    }
  }
  if (keep_pair) {
    for (const auto& c : run.clicks[static_cast<std::size_t>(cfg.pair_a)])
      tally.clicks_a.push_back(c.time);
    for (const auto& c : run.clicks[static_cast<std::size_t>(cfg.pair_b)])
      tally.clicks_b.push_back(c.time);
  }
  return tally;
}

struct TrialCells {
  long both = 0;
  long only_a = 0;
  long only_b = 0;
  long neither = 0;
  std::vector<long> counts;     // per-channel trials with a click
  std::vector<double> tau_sum;  // first-hit times
  std::uint64_t steps = 0;
};

inline TrialCells run_windowed_block(const ExperimentConfig& cfg, const ResolvedRun& r,
                                     std::uint64_t tag, std::uint64_t extra, long first,
                                     long count) {
  const int nch = r.assignment.channel_count();
  const bool have_pair = cfg.pair_a >= 0 && cfg.pair_b >= 0 && cfg.pair_a < nch &&
                         cfg.pair_b < nch && cfg.pair_a != cfg.pair_b;
  TrialCells cells;
  cells.counts.assign(static_cast<std::size_t>(nch), 0);
  cells.tau_sum.assign(static_cast<std::size_t>(nch), 0.0);
  for (long t = first; t < first + count; ++t) {
    RngStream rng(cfg.master_seed, derive_stream(tag, extra, static_cast<std::uint64_t>(t)));
    FieldSource src(r.chol, r.u_transposed ? &*r.u_transposed : nullptr, cfg.dt, rng);
    const auto run = run_detector(src, r.assignment, cfg.detector, cfg.T);
    cells.steps += run.steps;
    for (int j = 0; j < nch; ++j) {
      const auto& clicks = run.clicks[static_cast<std::size_t>(j)];
      if (!clicks.empty()) {
        ++cells.counts[static_cast<std::size_t>(j)];
        cells.tau_sum[static_cast<std::size_t>(j)] += clicks.front().time;
      }
    }
    if (!have_pair) continue;
    const bool a = !run.clicks[static_cast<std::size_t>(cfg.pair_a)].empty();
    const bool b = !run.clicks[static_cast<std::size_t>(cfg.pair_b)].empty();
    if (a && b) ++cells.both;
    else if (a) ++cells.only_a;
    else if (b) ++cells.only_b;
    else ++cells.neither;
  }
  return cells;
}

// Delta-method variance of g2 = pb / ((pb+pa)(pb+pb2)) over the multinomial
// cell frequencies of a windowed run.
inline double g2_variance_windowed(double pb, double pa, double pb2, double n) {
  const double s1 = pb + pa;
  const double s2 = pb + pb2;
  const double dpb = 1.0 / (s1 * s2) - pb * (s1 + s2) / (s1 * s1 * s2 * s2);
  const double dpa = -pb / (s1 * s1 * s2);
  const double dpb2 = -pb / (s1 * s2 * s2);
  const double grad[3] = {dpb, dpa, dpb2};
  const double p[3] = {pb, pa, pb2};
  double var = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double cov = (i == j ? p[i] * (1.0 - p[i]) : -p[i] * p[j]) / n;
      var += grad[i] * grad[j] * cov;
    }
  return var;
}

inline long windowed_block_size() { return 1024; }

}  // namespace detail

/// @brief Singles statistics: click counts and probabilities per channel.
///
/// Renewal mode counts clicks of every channel over the shared duration T and
/// reports P_j as the share N_j / N. Windowed mode runs n_trials independent
/// trials and counts trials with a click. Raises NoClicks when nothing fired.
inline ExperimentStats run_singles(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = detail::resolve(cfg);
  const int nch = r.assignment.channel_count();

  ExperimentStats stats;
  stats.kind = "singles";
  stats.detection_mode =
      cfg.detector.mode == DetectionMode::renewal ? "renewal" : "windowed";

  std::vector<long> counts(static_cast<std::size_t>(nch), 0);
  std::vector<double> tau_sum(static_cast<std::size_t>(nch), 0.0);
  std::vector<long> tau_count(static_cast<std::size_t>(nch), 0);
  long denominator = 0;

  if (cfg.detector.mode == DetectionMode::renewal) {
    const long n_chunks = cfg.n_chunks;
    const double chunk_t = cfg.T / static_cast<double>(n_chunks);
    std::vector<detail::ChunkTally> tallies(static_cast<std::size_t>(n_chunks));
    detail::parallel_blocks(n_chunks, cfg.threads, [&](long c) {
      tallies[static_cast<std::size_t>(c)] = detail::run_renewal_chunk(
          cfg, r, derive_stream(detail::kSinglesChunk, static_cast<std::uint64_t>(c)), chunk_t,
          false);
    });
    for (const auto& t : tallies) {
      stats.steps += t.steps;
      for (int j = 0; j < nch; ++j) {
        counts[static_cast<std::size_t>(j)] += t.counts[static_cast<std::size_t>(j)];
        tau_sum[static_cast<std::size_t>(j)] += t.tau_sum[static_cast<std::size_t>(j)];
        tau_count[static_cast<std::size_t>(j)] += t.tau_count[static_cast<std::size_t>(j)];
      }
    }
    for (long c : counts) denominator += c;
    if (n_chunks > 1)
      stats.notes.push_back("renewal run split into " + std::to_string(n_chunks) +
                            " zero-restart chunks");
  } else {
    const long block = detail::windowed_block_size();
    const long n_blocks = (cfg.n_trials + block - 1) / block;
    std::vector<detail::TrialCells> cells(static_cast<std::size_t>(n_blocks));
    detail::parallel_blocks(n_blocks, cfg.threads, [&](long b) {
      const long first = b * block;
      const long count = std::min(block, cfg.n_trials - first);
      cells[static_cast<std::size_t>(b)] =
          detail::run_windowed_block(cfg, r, detail::kSinglesTrial, 0, first, count);
    });
    for (const auto& cell : cells) {
      stats.steps += cell.steps;
      for (int j = 0; j < nch; ++j) {
        counts[static_cast<std::size_t>(j)] += cell.counts[static_cast<std::size_t>(j)];
        tau_sum[static_cast<std::size_t>(j)] += cell.tau_sum[static_cast<std::size_t>(j)];
      }
    }
    for (int j = 0; j < nch; ++j) tau_count[static_cast<std::size_t>(j)] = counts[static_cast<std::size_t>(j)];
    for (long c : counts) denominator += c;
    stats.n_trials = cfg.n_trials;
    stats.notes.push_back("windowed singles: P_j is the share of clicks across trials");
  }

  if (denominator == 0)
    throw Error(ErrorCode::NoClicks, "no detector clicked; threshold too high for this budget");

  stats.total_clicks = denominator;
  stats.channels.resize(static_cast<std::size_t>(nch));
  for (int j = 0; j < nch; ++j) {
    auto& ch = stats.channels[static_cast<std::size_t>(j)];
    ch.channel = j;
    ch.count = counts[static_cast<std::size_t>(j)];
    const auto w = wilson_interval(ch.count, denominator);
    ch.p = w.p;
    ch.ci_low = w.low;
    ch.ci_high = w.high;
    ch.tau_count = tau_count[static_cast<std::size_t>(j)];
    ch.mean_tau = ch.tau_count > 0 ? tau_sum[static_cast<std::size_t>(j)] /
                                         static_cast<double>(ch.tau_count)
                                   : 0.0;
  }

  stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
  return stats;
}

/// @brief Coincidence statistics for the designated channel pair.
///
/// Windowed mode: P_j is the fraction of trials where detector j clicked and
/// P12 the fraction where both clicked. Renewal mode: click rates are
/// converted to per-window probabilities, P_j = N_j w / T, and matched pairs
/// within the window give P12 = C w / (2T); the normalization is calibrated
/// so independent channels give g2 = 1. When P1 or P2 is zero the rate is
/// degenerate and g2 is reported as absent.
inline ExperimentStats run_coincidence(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = detail::resolve(cfg);
  const int nch = r.assignment.channel_count();
  if (cfg.pair_a < 0 || cfg.pair_b < 0 || cfg.pair_a >= nch || cfg.pair_b >= nch ||
      cfg.pair_a == cfg.pair_b)
    throw Error(ErrorCode::BadChannel, "coincidence run needs two distinct valid channels");

  ExperimentStats stats;
  stats.kind = "coincidence";
  stats.detection_mode =
      cfg.detector.mode == DetectionMode::renewal ? "renewal" : "windowed";
  PairStats pair;

  const std::uint64_t tbits = detail::threshold_bits(cfg.detector.threshold);

  if (cfg.detector.mode == DetectionMode::windowed) {
    const long block = detail::windowed_block_size();
    const long n_blocks = (cfg.n_trials + block - 1) / block;
    std::vector<detail::TrialCells> cells(static_cast<std::size_t>(n_blocks));
    detail::parallel_blocks(n_blocks, cfg.threads, [&](long b) {
      const long first = b * block;
      const long count = std::min(block, cfg.n_trials - first);
      cells[static_cast<std::size_t>(b)] =
          detail::run_windowed_block(cfg, r, detail::kCoincTrial, tbits, first, count);
    });

    long both = 0, only_a = 0, only_b = 0;
    std::vector<long> counts(static_cast<std::size_t>(nch), 0);
    for (const auto& cell : cells) {
      stats.steps += cell.steps;
      both += cell.both;
      only_a += cell.only_a;
      only_b += cell.only_b;
      for (int j = 0; j < nch; ++j)
        counts[static_cast<std::size_t>(j)] += cell.counts[static_cast<std::size_t>(j)];
    }

    const double n = static_cast<double>(cfg.n_trials);
    pair.p1 = static_cast<double>(both + only_a) / n;
    pair.p2 = static_cast<double>(both + only_b) / n;
    pair.p12 = static_cast<double>(both) / n;
    stats.n_trials = cfg.n_trials;
    stats.total_clicks = 0;
    stats.channels.resize(static_cast<std::size_t>(nch));
    for (int j = 0; j < nch; ++j) {
      auto& ch = stats.channels[static_cast<std::size_t>(j)];
      ch.channel = j;
      ch.count = counts[static_cast<std::size_t>(j)];
      stats.total_clicks += ch.count;
      const auto w = wilson_interval(ch.count, cfg.n_trials);
      ch.p = w.p;
      ch.ci_low = w.low;
      ch.ci_high = w.high;
    }

    if (pair.p1 > 0.0 && pair.p2 > 0.0) {
      pair.g2_defined = true;
      pair.g2 = pair.p12 / (pair.p1 * pair.p2);
      const double pb = pair.p12;
      const double pa = pair.p1 - pair.p12;
      const double pb2 = pair.p2 - pair.p12;
      const double var = detail::g2_variance_windowed(pb, pa, pb2, n);
      const double half = 1.959963984540054 * std::sqrt(std::max(var, 0.0));
      pair.g2_low = pair.g2 - half;
      pair.g2_high = pair.g2 + half;
    } else {
      stats.notes.push_back("DegenerateRate: a singles probability is zero, g2 undefined");
    }
    stats.notes.push_back("windowed coincidences: per-trial probabilities");
  } else {
    const long n_chunks = cfg.n_chunks;
    const double chunk_t = cfg.T / static_cast<double>(n_chunks);
    const double w = cfg.window();
    if (!(w > 0.0)) throw Error(ErrorCode::BadConfig, "coincidence_window must be positive");

    std::vector<detail::ChunkTally> tallies(static_cast<std::size_t>(n_chunks));
    detail::parallel_blocks(n_chunks, cfg.threads, [&](long c) {
      tallies[static_cast<std::size_t>(c)] = detail::run_renewal_chunk(
          cfg, r, derive_stream(detail::kCoincChunk, tbits, static_cast<std::uint64_t>(c)),
          chunk_t, true);
    });

    long n1 = 0, n2 = 0;
    long coincidences = 0;
    std::vector<long> counts(static_cast<std::size_t>(nch), 0);
    for (const auto& t : tallies) {
      stats.steps += t.steps;
      for (int j = 0; j < nch; ++j)
        counts[static_cast<std::size_t>(j)] += t.counts[static_cast<std::size_t>(j)];
      coincidences += static_cast<long>(find_coincidences(t.clicks_a, t.clicks_b, w));
    }
    n1 = counts[static_cast<std::size_t>(cfg.pair_a)];
    n2 = counts[static_cast<std::size_t>(cfg.pair_b)];

    stats.total_clicks = 0;
    for (long c : counts) stats.total_clicks += c;
    stats.channels.resize(static_cast<std::size_t>(nch));
    for (int j = 0; j < nch; ++j) {
      auto& ch = stats.channels[static_cast<std::size_t>(j)];
      ch.channel = j;
      ch.count = counts[static_cast<std::size_t>(j)];
      if (stats.total_clicks > 0) {
        const auto wi = wilson_interval(ch.count, stats.total_clicks);
        ch.p = wi.p;
        ch.ci_low = wi.low;
        ch.ci_high = wi.high;
      }
    }

    pair.p1 = static_cast<double>(n1) * w / cfg.T;
    pair.p2 = static_cast<double>(n2) * w / cfg.T;
    pair.p12 = static_cast<double>(coincidences) * w / (2.0 * cfg.T);
    if (n1 > 0 && n2 > 0) {
      pair.g2_defined = true;
      pair.g2 = pair.p12 / (pair.p1 * pair.p2);
      // Lognormal interval over the three Poisson-like counts.
      const double c_eff = coincidences > 0 ? static_cast<double>(coincidences) : 2.996;
      const double se = std::sqrt(1.0 / c_eff + 1.0 / static_cast<double>(n1) +
                                  1.0 / static_cast<double>(n2));
      const double g_for_bounds =
          coincidences > 0 ? pair.g2
                           : c_eff * cfg.T / (2.0 * w * static_cast<double>(n1) *
                                              static_cast<double>(n2)) * w * w / cfg.T;
      pair.g2_low = coincidences > 0 ? pair.g2 * std::exp(-1.959963984540054 * se) : 0.0;
      pair.g2_high = g_for_bounds * std::exp(1.959963984540054 * se);
    } else {
      stats.notes.push_back("DegenerateRate: a channel never clicked, g2 undefined");
    }
    stats.notes.push_back(
        "renewal coincidences: P_j = N_j*w/T and P12 = C*w/(2T); the per-window conversion is a "
        "modeling choice, calibrated so independent channels give g2 = 1");
    if (n_chunks > 1)
      stats.notes.push_back("renewal run split into " + std::to_string(n_chunks) +
                            " zero-restart chunks");
  }

  stats.pair = pair;
  stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
  return stats;
}

struct SweepRow {
  double threshold = 0.0;
  ExperimentStats stats;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool trend_defined = false;
  double kendall = 0.0;   // Kendall tau of g2 against threshold
  double kendall_p = 1.0; // one-sided P(tau <= observed) under no trend
};

/// One coincidence run per threshold; thresholds must be positive and
/// nondecreasing. Streams are keyed by the threshold value, so duplicated
/// thresholds reproduce identical rows.
inline SweepResult sweep_threshold(const ExperimentConfig& cfg,
                                   const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw Error(ErrorCode::BadArgs, "threshold list is empty");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0))
      throw Error(ErrorCode::ZeroThreshold, "thresholds must be positive");
    if (i > 0 && thresholds[i] < thresholds[i - 1])
      throw Error(ErrorCode::BadArgs, "thresholds must be ascending");
  }

  SweepResult result;
  result.rows.reserve(thresholds.size());
  for (double e : thresholds) {
    ExperimentConfig row_cfg = cfg;
    row_cfg.detector.threshold = e;
    result.rows.push_back({e, run_coincidence(row_cfg)});
  }

  std::vector<double> xs, ys;
  for (const auto& row : result.rows) {
    if (row.stats.pair && row.stats.pair->g2_defined) {
      xs.push_back(row.threshold);
      ys.push_back(row.stats.pair->g2);
    }
  }
  if (xs.size() >= 2) {
    result.trend_defined = true;
    result.kendall = kendall_tau(xs, ys);
    result.kendall_p = kendall_pvalue_leq(xs, ys);
  }
  return result;
}

struct BornRow {
  int channel = 0;
  double p = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double rho_jj = 0.0;
  double abs_err = 0.0;
  bool pass = false;
};

struct BornReport {
  ExperimentStats stats;
  std::vector<BornRow> rows;
  bool all_pass = false;
};

/// Compares empirical click shares against the quantum reference: the
/// diagonal of rho = B / Tr B, rotated into the measurement basis when one is
/// set. A channel passes when its Wilson interval covers the reference.
/// `reference_override` substitutes a different state (negative controls).
inline BornReport born_report(const ExperimentConfig& cfg,
                              const DensityMatrix* reference_override = nullptr) {
  BornReport report;
  report.stats = run_singles(cfg);

  const DensityMatrix rho =
      reference_override ? *reference_override : density_from_covariance(cfg.B);
  const auto assignment = cfg.assignment();
  const int m = cfg.B.dim();

  report.all_pass = true;
  for (const auto& ch : report.stats.channels) {
    BornRow row;
    row.channel = ch.channel;
    row.p = ch.p;
    row.ci_low = ch.ci_low;
    row.ci_high = ch.ci_high;
    double ref = 0.0;
    for (int c : assignment.components[static_cast<std::size_t>(ch.channel)]) {
      const Projector proj =
          cfg.measurement_basis
              ? Projector::onto_direction(column(*cfg.measurement_basis, c))
              : Projector::onto_axis(m, c);
      ref += born_probability(rho, proj);
    }
    row.rho_jj = ref;
    row.abs_err = std::abs(row.p - ref);
    row.pass = ref >= row.ci_low && ref <= row.ci_high;
    report.all_pass = report.all_pass && row.pass;
    report.rows.push_back(row);
  }
  for (auto& ch : report.stats.channels) {
    const auto& row = report.rows[static_cast<std::size_t>(ch.channel)];
    ch.reference = row.rho_jj;
    ch.has_reference = true;
    ch.pass = row.pass;
  }
  return report;
}

struct TauRow {
  int channel = 0;
  long clicks = 0;
  double mean_tau = 0.0;
  double expected_tau = 0.0;
  double rel_err = 0.0;
  bool pass = false;
};

struct TauReport {
  ExperimentStats stats;
  std::vector<TauRow> rows;
  bool all_pass = false;
};

/// Empirical mean hitting time per channel against the closed form
/// E_d / power. Needs a renewal run without global reset and at least 100
/// clicks per channel; passes at 3% relative error.
inline TauReport mean_tau_report(const ExperimentConfig& cfg) {
  if (cfg.detector.mode != DetectionMode::renewal)
    throw Error(ErrorCode::BadConfig, "mean_tau_report needs detector.mode = renewal");
  if (cfg.detector.global_reset)
    throw Error(ErrorCode::BadConfig,
                "mean_tau_report needs per-channel resets (global_reset = false)");

  TauReport report;
  report.stats = run_singles(cfg);
  const auto r = detail::resolve(cfg);

  report.all_pass = true;
  for (const auto& ch : report.stats.channels) {
    if (ch.tau_count < 100)
      throw Error(ErrorCode::InsufficientClicks,
                  "channel " + std::to_string(ch.channel) + " has " +
                      std::to_string(ch.tau_count) + " clicks; need at least 100");
    TauRow row;
    row.channel = ch.channel;
    row.clicks = ch.tau_count;
    row.mean_tau = ch.mean_tau;
    row.expected_tau =
        expected_hitting_time(cfg.detector.threshold, detail::channel_power(r, ch.channel));
    row.rel_err = std::abs(row.mean_tau - row.expected_tau) / row.expected_tau;
    row.pass = row.rel_err <= 0.03;
    report.all_pass = report.all_pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace pcsft
