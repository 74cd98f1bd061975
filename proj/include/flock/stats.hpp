#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "flock/errors.hpp"

namespace flock {

struct Summary {
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;          // sample standard deviation (n - 1 divisor)
  double half_width = 0.0;  // Student-t confidence half-width for the mean
  double min = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

// Linear-interpolation quantile (the common "type 7" rule) on sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) throw InsufficientSamples("quantile of empty sample");
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Mean, spread and t-based confidence half-width of a sample. Needs at least
// two values: with one the standard error is undefined. The sample is sorted
// before any accumulation, so the result does not depend on arrival order
// (trial farms may reduce in any schedule).
inline Summary summarize(std::vector<double> values, double confidence = 0.95) {
  if (values.size() < 2) throw InsufficientSamples("summary needs at least two samples");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("confidence must lie in (0, 1)");
  }
  std::sort(values.begin(), values.end());
  Summary s;
  s.n = static_cast<int>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / (s.n - 1));
  const boost::math::students_t_distribution<double> dist(static_cast<double>(s.n - 1));
  const double t = boost::math::quantile(dist, 0.5 + confidence / 2.0);
  s.half_width = t * s.sd / std::sqrt(static_cast<double>(s.n));
  s.min = values.front();
  s.max = values.back();
  s.q25 = quantile_sorted(values, 0.25);
  s.q50 = quantile_sorted(values, 0.50);
  s.q75 = quantile_sorted(values, 0.75);
  return s;
}

}  // namespace flock
