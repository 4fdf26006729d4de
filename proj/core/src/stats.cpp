#include "swarmraft/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "swarmraft/error.hpp"

namespace swarmraft {

double mean_absolute_error(std::span<const Position> estimates, std::span<const Position> truths) {
  if (estimates.size() != truths.size()) throw Error("mean_absolute_error: length mismatch");
  if (estimates.empty()) throw Error("mean_absolute_error: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    sum += euclidean_distance(estimates[i], truths[i]);
  }
  return sum / static_cast<double>(estimates.size());
}

double sample_mean(std::span<const double> values) {
  if (values.empty()) throw Error("sample_mean: empty input");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = sample_mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

namespace {

double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw Error("quantile: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted_quantile(sorted, std::clamp(q, 0.0, 1.0));
}

SummaryStats summarize(std::span<const double> values) {
  if (values.empty()) throw Error("summarize: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  SummaryStats s;
  s.mean = sample_mean(values);
  s.median = sorted_quantile(sorted, 0.5);
  s.q1 = sorted_quantile(sorted, 0.25);
  s.q3 = sorted_quantile(sorted, 0.75);
  s.min = sorted.front();
  s.max = sorted.back();
  return s;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("log_log_slope: need >= 2 paired points");
  double mx = 0.0, my = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace swarmraft
