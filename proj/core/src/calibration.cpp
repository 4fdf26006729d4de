#include "swarmraft/calibration.hpp"

#include <algorithm>

#include "swarmraft/error.hpp"
#include "swarmraft/harness.hpp"
#include "swarmraft/stats.hpp"

namespace swarmraft {

std::vector<double> honest_residuals(const SwarmConfig& cfg, Seed seed) {
  SwarmConfig honest = cfg;
  honest.f = 0;
  honest.consensus_enabled = false;
  World w = init_world(honest, seed);
  const SensedRound sensed = sense_round(w);
  std::vector<double> out;
  out.reserve(honest.n);
  for (NodeId i = 0; i < honest.n; ++i) {
    std::vector<Anchor> peers;
    for (NodeId j = 0; j < honest.n; ++j) {
      if (j != i) peers.push_back({sensed.reports[j].reported_position, sensed.ranges.at(i, j)});
    }
    out.push_back(residual(sensed.reports[i], peers));
  }
  return out;
}

CalibrationResult calibrate_threshold(const SwarmConfig& cfg, std::size_t trials, Seed seed) {
  if (trials < 30) throw Error("insufficient calibration sample");
  if (cfg.f > 0) throw Error("calibration requires honest configuration");
  CalibrationResult r;
  r.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    const Seed s{derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::calibration), t})};
    const auto res = honest_residuals(cfg, s);
    r.residuals.insert(r.residuals.end(), res.begin(), res.end());
  }
  r.mu_e = sample_mean(r.residuals);
  r.sigma_e = sample_stddev(r.residuals);
  r.T = r.mu_e + 3.0 * r.sigma_e;
  return r;
}

double exceedance_rate(std::span<const double> residuals, double T) {
  if (residuals.empty()) throw Error("empty residual sample");
  const auto above = std::count_if(residuals.begin(), residuals.end(), [&](double e) { return e > T; });
  return static_cast<double>(above) / static_cast<double>(residuals.size());
}

std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty() || bins == 0) return {};
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lower = lo + width * static_cast<double>(b);
    out[b].upper = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (double v : values) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - lo) / width) : 0;
    out[std::min(b, bins - 1)].count += 1;
  }
  return out;
}

}  // namespace swarmraft
