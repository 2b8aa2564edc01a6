#pragma once

#include <cmath>
#include <map>
#include <string>

#include "pcsft/error.hpp"

namespace pcsft {

/// Closed-form reference value together with the formula that produced it.
struct OracleResult {
  std::string formula_id;  // mean_tau | click_rate | born | survival_1d
  double value = 0.0;
  std::map<std::string, double> inputs;
};

/// Mean first hitting time of the energy threshold: E_d / power.
inline double expected_hitting_time(double threshold, double power) {
  if (!(power > 0.0)) throw Error(ErrorCode::ZeroPower, "power must be positive");
  if (threshold < 0.0) throw Error(ErrorCode::BadArgs, "threshold must be nonnegative");
  return threshold / power;
}

/// Clicks per unit time for a detector fed by a channel of the given power.
inline double click_rate(double power, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::ZeroThreshold, "threshold must be positive");
  if (power < 0.0) throw Error(ErrorCode::BadArgs, "power must be nonnegative");
  return power / threshold;
}

/// Expected number of clicks over a run of duration T.
inline double expected_count(double power, double threshold, double duration) {
  if (duration < 0.0) throw Error(ErrorCode::BadArgs, "duration must be nonnegative");
  return click_rate(power, threshold) * duration;
}

/// @brief Survival function of the scalar-channel hitting time.
///
/// P(tau > t) for a one-component Brownian channel of the given power hitting
/// the energy threshold, evaluated from the alternating series
///   (4/pi) sum_k [(-1)^k / (2k+1)] exp(-(2k+1)^2 pi^2 power t / (8 threshold)).
/// The series stops when the next term falls below 1e-14 or after max_terms
/// terms. Its integral over t >= 0 equals threshold / power, matching
/// expected_hitting_time.
inline double survival_1d(double t, double threshold, double power, int max_terms = 4096) {
  if (!(threshold > 0.0) || !(power > 0.0) || t < 0.0 || max_terms < 1)
    throw Error(ErrorCode::BadArgs, "survival_1d needs t >= 0, threshold > 0, power > 0, terms >= 1");
  if (t == 0.0) return 1.0;
  const double lambda = 3.141592653589793238462643383279502884 *
                        3.141592653589793238462643383279502884 * power * t / (8.0 * threshold);
  double sum = 0.0;
  for (int k = 0; k < max_terms; ++k) {
    const double odd = 2.0 * k + 1.0;
    const double term = std::exp(-odd * odd * lambda) / odd;
    sum += (k % 2 == 0) ? term : -term;
    const double next_odd = odd + 2.0;
    if (std::exp(-next_odd * next_odd * lambda) / next_odd < 1e-14) break;
  }
  const double p = sum * 4.0 / 3.141592653589793238462643383279502884;
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

}  // namespace pcsft
