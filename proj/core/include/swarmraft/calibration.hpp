#pragma once

#include <span>
#include <vector>

#include "swarmraft/config.hpp"

namespace swarmraft {

struct CalibrationResult {
  double mu_e = 0.0;
  double sigma_e = 0.0;
  /// mu_e + 3 sigma_e.
  double T = 0.0;
  std::size_t trials = 0;
  /// One residual per node and trial.
  std::vector<double> residuals;
};

/// Residual of every node in one honest round, against all other reports.
std::vector<double> honest_residuals(const SwarmConfig& cfg, Seed trial_seed);

/// Runs `trials` honest rounds and pools the node residuals. Throws
/// Error("insufficient calibration sample") for trials < 30 and
/// Error("calibration requires honest configuration") when f > 0.
CalibrationResult calibrate_threshold(const SwarmConfig& cfg, std::size_t trials, Seed seed);

/// Fraction of residuals strictly above T.
double exceedance_rate(std::span<const double> residuals, double T);

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [min, max] of the sample.
std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins);

}  // namespace swarmraft
