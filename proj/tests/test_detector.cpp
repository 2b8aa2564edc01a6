#include <catch2/catch.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "pcsft/detector.hpp"
#include "pcsft/stats.hpp"
#include "pcsft/wiener.hpp"
#include "test_helpers.hpp"

using namespace pcsft;

namespace {

FieldTrajectory trajectory_from_values(double dt, const std::vector<std::vector<double>>& values) {
  FieldTrajectory path;
  path.dt = dt;
  for (const auto& v : values) path.samples.emplace_back(v);
  return path;
}

}  // namespace

TEST_CASE("channel energy", "[detector]") {
  const auto singles = ChannelAssignment::singletons(2);
  CHECK(channel_energy(FieldVector({3.0, 4.0}), singles, 0) == 9.0);

  const auto paired = ChannelAssignment::pairs(2);
  CHECK(channel_energy(FieldVector({3.0, 4.0}), paired, 0) == 25.0);

  CHECK(channel_energy(FieldVector({0.0, 0.0}), singles, 1) == 0.0);
  CHECK_THROWS_AS(channel_energy(FieldVector({1.0, 1.0}), singles, 2), Error);
}

TEST_CASE("channel assignments must be disjoint", "[detector]") {
  ChannelAssignment bad;
  bad.components = {{0}, {0}};
  CHECK_THROWS_AS(bad.validate(2), Error);
  CHECK_THROWS_AS(ChannelAssignment::pairs(3), Error);
}

TEST_CASE("first hit follows the crossing rule", "[detector]") {
  const std::vector<std::pair<double, double>> energies = {{0.0, 0.0}, {0.1, 0.5}, {0.2, 1.2}};
  const auto grid = first_hit(energies, 1.0, CrossingRule::grid);
  REQUIRE(grid.has_value());
  CHECK(*grid == Approx(0.2).margin(1e-15));

  const auto interp = first_hit(energies, 1.0, CrossingRule::interpolated);
  REQUIRE(interp.has_value());
  CHECK(*interp == Approx(0.1 + 0.1 * 0.5 / 0.7).margin(1e-12));

  const std::vector<std::pair<double, double>> low = {{0.0, 0.0}, {0.1, 0.5}, {0.2, 0.9}};
  CHECK(!first_hit(low, 1.0, CrossingRule::grid).has_value());
}

TEST_CASE("detector clicks on a crafted path", "[detector]") {
  // Energies 0, 0.5, 1.2 at s = 0, 0.1, 0.2.
  const auto path = trajectory_from_values(
      0.1, {{0.0}, {std::sqrt(0.5)}, {std::sqrt(1.2)}});
  const auto assignment = ChannelAssignment::singletons(1);

  DetectorConfig grid_cfg;
  grid_cfg.threshold = 1.0;
  grid_cfg.crossing_rule = CrossingRule::grid;
  TrajectorySource src1(path);
  const auto grid_run = run_detector(src1, assignment, grid_cfg, 0.2);
  REQUIRE(grid_run.clicks[0].size() == 1);
  CHECK(grid_run.clicks[0][0].time == Approx(0.2).margin(1e-12));

  DetectorConfig interp_cfg = grid_cfg;
  interp_cfg.crossing_rule = CrossingRule::interpolated;
  TrajectorySource src2(path);
  const auto interp_run = run_detector(src2, assignment, interp_cfg, 0.2);
  REQUIRE(interp_run.clicks[0].size() == 1);
  CHECK(interp_run.clicks[0][0].time == Approx(0.1 + 0.1 * 0.5 / 0.7).margin(1e-12));
}

TEST_CASE("renewal click count approaches power * T / threshold", "[detector]") {
  const CovarianceOperator b(Matrix::identity(1));
  DetectorConfig cfg;
  cfg.threshold = 1.0;
  cfg.mode = DetectionMode::renewal;
  GaussianIncrementSource src(cholesky(b), 1e-4, RngStream(404, 1));
  const double duration = 2000.0;
  const auto run = run_detector(src, ChannelAssignment::singletons(1), cfg, duration);
  const double n = static_cast<double>(run.clicks[0].size());
  CHECK(n > 2000.0 * 0.95);
  CHECK(n < 2000.0 * 1.05);
}

TEST_CASE("unreachable threshold never clicks", "[detector]") {
  const CovarianceOperator b(Matrix::identity(1));
  DetectorConfig cfg;
  cfg.threshold = 1e12;
  GaussianIncrementSource src(cholesky(b), 1e-3, RngStream(5, 5));
  const auto run = run_detector(src, ChannelAssignment::singletons(1), cfg, 10.0);
  CHECK(run.clicks[0].empty());
}

TEST_CASE("grid crossing never precedes the interpolated one", "[detector]") {
  const CovarianceOperator b(Matrix::identity(1));
  const auto assignment = ChannelAssignment::singletons(1);
  DetectorConfig grid_cfg;
  grid_cfg.threshold = 1.0;
  grid_cfg.crossing_rule = CrossingRule::grid;
  DetectorConfig interp_cfg = grid_cfg;
  interp_cfg.crossing_rule = CrossingRule::interpolated;

  GaussianIncrementSource src_a(cholesky(b), 1e-3, RngStream(17, 6));
  GaussianIncrementSource src_b(cholesky(b), 1e-3, RngStream(17, 6));
  const auto grid_run = run_detector(src_a, assignment, grid_cfg, 200.0);
  const auto interp_run = run_detector(src_b, assignment, interp_cfg, 200.0);

  REQUIRE(grid_run.clicks[0].size() == interp_run.clicks[0].size());
  REQUIRE(grid_run.clicks[0].size() > 100);
  for (std::size_t i = 0; i < grid_run.clicks[0].size(); ++i)
    CHECK(grid_run.clicks[0][i].time >= interp_run.clicks[0][i].time - 1e-12);
}

TEST_CASE("raising the threshold never hastens the first click", "[detector]") {
  const CovarianceOperator b(Matrix::identity(1));
  const auto assignment = ChannelAssignment::singletons(1);
  DetectorConfig cfg;
  cfg.mode = DetectionMode::windowed;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    cfg.threshold = 1.0;
    GaussianIncrementSource low(cholesky(b), 1e-3, RngStream(900, trial));
    const auto run_low = run_detector(low, assignment, cfg, 20.0);
    cfg.threshold = 2.0;
    GaussianIncrementSource high(cholesky(b), 1e-3, RngStream(900, trial));
    const auto run_high = run_detector(high, assignment, cfg, 20.0);
    if (!run_high.clicks[0].empty()) {
      REQUIRE(!run_low.clicks[0].empty());
      CHECK(run_low.clicks[0][0].time <= run_high.clicks[0][0].time + 1e-12);
    }
  }
}

TEST_CASE("dead time separates clicks", "[detector]") {
  const CovarianceOperator b(Matrix::identity(1));
  const auto assignment = ChannelAssignment::singletons(1);
  DetectorConfig cfg;
  cfg.threshold = 0.5;
  cfg.dead_time = 0.05;
  GaussianIncrementSource src(cholesky(b), 1e-3, RngStream(321, 7));
  const auto run = run_detector(src, assignment, cfg, 300.0);
  REQUIRE(run.clicks[0].size() > 100);
  for (std::size_t i = 1; i < run.clicks[0].size(); ++i)
    CHECK(run.clicks[0][i].time - run.clicks[0][i - 1].time > 0.05);

  cfg.dead_time = 0.0;
  GaussianIncrementSource src2(cholesky(b), 1e-3, RngStream(321, 7));
  const auto run2 = run_detector(src2, assignment, cfg, 300.0);
  CHECK(run2.clicks[0].size() > run.clicks[0].size());
}

TEST_CASE("windowed trials report at most one click per channel", "[detector]") {
  const CovarianceOperator b(Matrix::identity(2));
  DetectorConfig cfg;
  cfg.threshold = 0.05;
  cfg.mode = DetectionMode::windowed;
  GaussianIncrementSource src(cholesky(b), 1e-3, RngStream(11, 11));
  const auto run = run_detector(src, ChannelAssignment::singletons(2), cfg, 5.0);
  CHECK(run.clicks[0].size() == 1);
  CHECK(run.clicks[1].size() == 1);
}

TEST_CASE("windowed click indicators of independent channels are independent", "[detector]") {
  const CovarianceOperator b(Matrix::identity(2));
  DetectorConfig cfg;
  cfg.threshold = 1.5;
  cfg.mode = DetectionMode::windowed;
  const auto assignment = ChannelAssignment::singletons(2);

  long both = 0, only1 = 0, only2 = 0, neither = 0;
  const long trials = 10000;
  for (long t = 0; t < trials; ++t) {
    GaussianIncrementSource src(cholesky(b), 5e-3, RngStream(606, derive_stream(1, t)));
    const auto run = run_detector(src, assignment, cfg, 1.0);
    const bool a = !run.clicks[0].empty();
    const bool c = !run.clicks[1].empty();
    if (a && c) ++both;
    else if (a) ++only1;
    else if (c) ++only2;
    else ++neither;
  }
  // 1% critical value of chi-square with one degree of freedom is 6.63.
  CHECK(chi2_independence(both, only1, only2, neither) < 6.63);
}

TEST_CASE("global reset drains the other channel", "[detector]") {
  // Step 1 pushes channel 1 over threshold; channel 0 holds 0.6. Without a
  // global reset channel 0 completes its climb on step 2; with it the click
  // disappears because the field was consumed.
  const auto path = trajectory_from_values(
      0.1, {{0.0, 0.0}, {0.6, 1.1}, {1.1, 1.1}});
  const auto assignment = ChannelAssignment::singletons(2);

  DetectorConfig cfg;
  cfg.threshold = 1.0;
  cfg.crossing_rule = CrossingRule::grid;

  TrajectorySource local(path);
  const auto per_channel = run_detector(local, assignment, cfg, 0.2);
  CHECK(per_channel.clicks[0].size() == 1);
  CHECK(per_channel.clicks[1].size() == 1);

  cfg.global_reset = true;
  TrajectorySource global(path);
  const auto collapsed = run_detector(global, assignment, cfg, 0.2);
  CHECK(collapsed.clicks[0].empty());
  CHECK(collapsed.clicks[1].size() == 1);
}

TEST_CASE("simultaneous crossings all click before any reset", "[detector]") {
  const auto path = trajectory_from_values(0.1, {{0.0, 0.0}, {1.1, -1.2}});
  const auto assignment = ChannelAssignment::singletons(2);
  DetectorConfig cfg;
  cfg.threshold = 1.0;
  cfg.global_reset = true;
  TrajectorySource src(path);
  const auto run = run_detector(src, assignment, cfg, 0.1);
  CHECK(run.clicks[0].size() == 1);
  CHECK(run.clicks[1].size() == 1);
}

TEST_CASE("excursion start times track resets", "[detector]") {
  const CovarianceOperator b(Matrix::identity(1));
  DetectorConfig cfg;
  cfg.threshold = 0.8;
  GaussianIncrementSource src(cholesky(b), 1e-3, RngStream(88, 2));
  const auto run = run_detector(src, ChannelAssignment::singletons(1), cfg, 100.0);
  REQUIRE(run.clicks[0].size() > 10);
  CHECK(run.clicks[0][0].excursion_start == 0.0);
  for (std::size_t i = 1; i < run.clicks[0].size(); ++i) {
    const auto& prev = run.clicks[0][i - 1];
    const auto& cur = run.clicks[0][i];
    CHECK(cur.excursion_start >= prev.time);
    CHECK(cur.time > cur.excursion_start);
  }
}

TEST_CASE("energy at the stopping step balances Tr B times the stopping time", "[detector]") {
  // Optional stopping of the energy martingale, exact for grid-rule stopping.
  const Matrix bm(2, {1.0, 0.6, 0.6, 2.0});
  const CovarianceOperator b(bm);
  const Matrix a = cholesky(b);
  const double threshold = 1.0, dt = 1e-3, cap = 50.0;
  const long n = 20000;
  double sum_energy = 0.0, sum_tau = 0.0, sum_sq = 0.0;
  for (long t = 0; t < n; ++t) {
    GaussianIncrementSource src(a, dt, RngStream(1234, derive_stream(5, t)));
    double x0 = 0.0, x1 = 0.0;
    double stop_energy = 0.0, stop_time = cap;
    const long steps = static_cast<long>(cap / dt);
    for (long i = 1; i <= steps; ++i) {
      const auto& inc = src.next();
      x0 += inc[0];
      x1 += inc[1];
      if (x0 * x0 >= threshold) {
        stop_energy = x0 * x0 + x1 * x1;
        stop_time = i * dt;
        break;
      }
      if (i == steps) stop_energy = x0 * x0 + x1 * x1;
    }
    const double diff = stop_energy - b.trace() * stop_time;
    sum_energy += stop_energy;
    sum_tau += stop_time;
    sum_sq += diff * diff;
  }
  const double mean_diff = (sum_energy - b.trace() * sum_tau) / n;
  const double se = std::sqrt(sum_sq / n / n);
  CHECK(std::abs(mean_diff) < 4.0 * se);
}

TEST_CASE("coincidence matching is greedy and single-use", "[detector]") {
  CHECK(find_coincidences({1.0}, {1.0005}, 0.001) == 1);
  CHECK(find_coincidences({1.0}, {2.0}, 0.001) == 0);
  CHECK(find_coincidences({1.0, 1.001}, {1.0005}, 0.001) == 1);
  CHECK(find_coincidences({}, {1.0}, 0.5) == 0);
  CHECK(find_coincidences({1.0, 2.0, 3.0}, {1.1, 2.1, 3.1}, 0.2) == 3);
  CHECK_THROWS_AS(find_coincidences({1.0}, {1.0}, -0.1), Error);
}
