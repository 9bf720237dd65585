#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "codedbai/errors.hpp"

namespace codedbai {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(long successes, long n, double z = 1.96) {
  if (n <= 0) return {0.0, 1.0};
  const double p = static_cast<double>(successes) / static_cast<double>(n);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Rule of three: 95% upper bound on a probability after n failure-free trials.
inline double rule_of_three(long n) { return n > 0 ? 3.0 / static_cast<double>(n) : 1.0; }

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  std::size_t points = 0;
};

// Weighted least squares of y = a + b x, weights interpreted as inverse
// variances, so the standard errors come straight from the normal equations.
inline LineFit fit_weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                                 const std::vector<double>& w) {
  if (x.size() != y.size() || x.size() != w.size() || x.size() < 2)
    throw InsufficientData("fit_weighted_line: need at least 2 points");
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
    swxx += w[i] * x[i] * x[i];
    swxy += w[i] * x[i] * y[i];
  }
  const double det = sw * swxx - swx * swx;
  if (det <= 0 || sw <= 0) throw InsufficientData("fit_weighted_line: degenerate design");
  LineFit fit;
  fit.slope = (sw * swxy - swx * swy) / det;
  fit.intercept = (swxx * swy - swx * swxy) / det;
  fit.slope_se = std::sqrt(sw / det);
  fit.intercept_se = std::sqrt(swxx / det);
  fit.points = x.size();
  return fit;
}

}  // namespace codedbai
