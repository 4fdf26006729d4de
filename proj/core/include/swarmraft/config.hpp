#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarmraft/attacks.hpp"
#include "swarmraft/geometry.hpp"
#include "swarmraft/raft.hpp"
#include "swarmraft/verification.hpp"

namespace swarmraft {

enum class MotionModel { static_formation, constant_velocity };
std::string_view to_string(MotionModel m);
MotionModel parse_motion_model(std::string_view text);

/// Detection settings as configured. Unset tau/epsilon/T are resolved from a
/// calibration run: T = mu_e + 3 sigma_e, tau = T, epsilon = tau.
struct DetectionConfig {
  std::optional<double> tau;
  std::optional<double> epsilon;
  std::optional<double> residual_threshold_T;
  int k_max = 100;
  double step_tol = 1e-9;
  std::size_t min_anchors = 3;
  FallbackPolicy fallback = FallbackPolicy::ins_only;
  InitPolicy init = InitPolicy::reported;
  bool use_residual_detector = false;
  std::size_t calibration_trials = 200;
  friend bool operator==(const DetectionConfig&, const DetectionConfig&) = default;
};

struct SwarmConfig {
  std::size_t n = 5;
  std::size_t f = 1;
  std::size_t rounds = 1;
  int dimension = 3;
  double bounding_box = 200.0;
  double min_separation = 10.0;
  CovarianceDiag r_gnss = CovarianceDiag::isotropic(4.0);
  CovarianceDiag r_ins = CovarianceDiag::isotropic(0.25);
  double sigma_d = 0.5;
  MotionModel motion = MotionModel::static_formation;
  /// Per-round displacement magnitude under constant_velocity, meters.
  double speed = 1.0;
  AttackConfig attack;
  DetectionConfig detection;
  bool consensus_enabled = false;
  raft::TimeoutRange raft_timeouts;
  Seed seed{1};

  /// Throws Error describing the first violated constraint.
  void validate() const;
  friend bool operator==(const SwarmConfig&, const SwarmConfig&) = default;
};

/// Every accepted key, in canonical order.
const std::vector<std::string>& config_keys();

/// Sets one key from its textual value. Throws Error on unknown keys or bad values.
void apply_override(SwarmConfig& cfg, std::string_view key, std::string_view value);

/// Parses "key = value" lines; '#' starts a comment. Unknown keys are rejected.
SwarmConfig parse_config(std::string_view text, SwarmConfig base = {});
SwarmConfig load_config(const std::string& path);

/// Canonical textual value for a key; "auto" for unset detection thresholds.
std::string config_value(const SwarmConfig& cfg, std::string_view key);
std::string to_text(const SwarmConfig& cfg);
nlohmann::ordered_json to_json(const SwarmConfig& cfg);

/// Detection parameters with calibration-dependent fields filled in from T.
DetectionParams resolve_detection(const DetectionConfig& cfg, double calibrated_T);

/// Lower bound applied to tau and epsilon when the calibrated T is zero.
inline constexpr double kMinTolerance = 1e-6;

}  // namespace swarmraft
