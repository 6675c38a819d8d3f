#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "greennas/error.hpp"

namespace greennas {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

inline double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
inline double stddev_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Two-sided paired t-test on d = a - b. All-zero differences give p = 1;
// zero spread with a nonzero mean gives an infinite t and the smallest
// positive normal double as p.
inline TestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "paired_ttest: samples must be paired");
  require(a.size() >= 2, "paired_ttest: need at least 2 pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double m = mean_of(d), s = stddev_of(d);
  const auto n = static_cast<double>(d.size());
  if (s == 0.0) {
    if (m == 0.0) return {0.0, 1.0};
    return {std::copysign(std::numeric_limits<double>::infinity(), m), std::numeric_limits<double>::min()};
  }
  const double t = m / (s / std::sqrt(n));
  boost::math::students_t dist(n - 1.0);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return {t, std::max(p, std::numeric_limits<double>::min())};
}

// Wilcoxon signed-rank test on d = a - b with the normal approximation
// (no continuity correction, tie-corrected variance). Zero differences are
// dropped. The statistic is W+, the rank sum of positive differences.
inline TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "wilcoxon_signed_rank: samples must be paired");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  const std::size_t n = d.size();
  if (n == 0) return {0.0, 1.0};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });
  double w_plus = 0.0, tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    const auto t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (d[order[k]] > 0) w_plus += rank;
    i = j;
  }
  const auto nn = static_cast<double>(n);
  const double mean = nn * (nn + 1) / 4.0;
  const double var = nn * (nn + 1) * (2 * nn + 1) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) return {w_plus, 1.0};
  const double z = (w_plus - mean) / std::sqrt(var);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), std::abs(z)));
  return {w_plus, std::clamp(p, std::numeric_limits<double>::min(), 1.0)};
}

}  // namespace greennas
