#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "pcsft/error.hpp"

namespace pcsft {

/// 95% Wilson score interval for a binomial proportion. Behaves sensibly at
/// small counts and at k = 0 or k = n, unlike the Wald interval.
struct WilsonInterval {
  double p = 0.0;
  double low = 0.0;
  double high = 0.0;

  bool covers(double q) const { return q >= low && q <= high; }
};

inline WilsonInterval wilson_interval(long successes, long n, double z = 1.959963984540054) {
  if (n <= 0 || successes < 0 || successes > n)
    throw Error(ErrorCode::BadArgs, "wilson_interval needs 0 <= successes <= n, n > 0");
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (phat + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
  WilsonInterval w;
  w.p = phat;
  w.low = successes == 0 ? 0.0 : std::max(0.0, center - half);
  w.high = successes == n ? 1.0 : std::min(1.0, center + half);
  return w;
}

/// Kendall rank correlation (tau-a). Tied pairs count as neither concordant
/// nor discordant.
inline double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorCode::BadArgs, "kendall_tau needs two equally sized series of length >= 2");
  long concordant = 0, discordant = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[j] - x[i];
      const double dy = y[j] - y[i];
      const double prod = dx * dy;
      if (prod > 0.0) ++concordant;
      else if (prod < 0.0) ++discordant;
    }
  const double pairs = static_cast<double>(n) * (static_cast<double>(n) - 1.0) / 2.0;
  return static_cast<double>(concordant - discordant) / pairs;
}

/// One-sided exact p-value P(tau <= observed) under the null of a uniformly
/// random ranking, by enumerating all permutations. Practical for n <= 9;
/// larger n falls back to the normal approximation.
inline double kendall_pvalue_leq(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  const double observed = kendall_tau(x, y);
  if (n <= 9) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    long total = 0, at_or_below = 0;
    std::vector<double> ix(n);
    std::iota(ix.begin(), ix.end(), 0.0);
    do {
      std::vector<double> py(n);
      for (std::size_t i = 0; i < n; ++i) py[i] = static_cast<double>(perm[i]);
      ++total;
      if (kendall_tau(ix, py) <= observed + 1e-12) ++at_or_below;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(at_or_below) / static_cast<double>(total);
  }
  const double nn = static_cast<double>(n);
  const double var = 2.0 * (2.0 * nn + 5.0) / (9.0 * nn * (nn - 1.0));
  const double z = observed / std::sqrt(var);
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

/// Kolmogorov-Smirnov distance between a sample and a reference CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw Error(ErrorCode::BadArgs, "ks_statistic needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::abs(static_cast<double>(i) / n - f));
  }
  return d;
}

/// Pearson chi-square statistic for independence in a 2x2 table
/// (1 degree of freedom).
inline double chi2_independence(long both, long only1, long only2, long neither) {
  const double n = static_cast<double>(both + only1 + only2 + neither);
  if (n <= 0.0) throw Error(ErrorCode::BadArgs, "empty contingency table");
  const double r1 = static_cast<double>(both + only1);
  const double r2 = static_cast<double>(only2 + neither);
  const double c1 = static_cast<double>(both + only2);
  const double c2 = static_cast<double>(only1 + neither);
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) return 0.0;
  const double cells[4] = {static_cast<double>(both), static_cast<double>(only1),
                           static_cast<double>(only2), static_cast<double>(neither)};
  const double expect[4] = {r1 * c1 / n, r1 * c2 / n, r2 * c1 / n, r2 * c2 / n};
  double chi2 = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double d = cells[i] - expect[i];
    chi2 += d * d / expect[i];
  }
  return chi2;
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace pcsft
