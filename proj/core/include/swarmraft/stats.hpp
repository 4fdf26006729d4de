#pragma once

#include <span>

#include "swarmraft/geometry.hpp"

namespace swarmraft {

/// (1/n) sum ||estimate_i - truth_i||. Throws on empty or mismatched input.
double mean_absolute_error(std::span<const Position> estimates, std::span<const Position> truths);

double sample_mean(std::span<const double> values);
/// Unbiased (n-1) standard deviation; 0 for a single value.
double sample_stddev(std::span<const double> values);

/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::span<const double> values, double q);

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;

  double iqr() const { return q3 - q1; }
  friend bool operator==(const SummaryStats&, const SummaryStats&) = default;
};

SummaryStats summarize(std::span<const double> values);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace swarmraft
