#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "swarmraft/geometry.hpp"
#include "swarmraft/sensors.hpp"

namespace swarmraft {

struct RangeEntry {
  NodeId peer = 0;
  double meters = 0.0;
  friend bool operator==(const RangeEntry&, const RangeEntry&) = default;
};

/// What a node sends to the leader each round.
struct ClientReport {
  NodeId node_id = 0;
  /// GNSS reading, or the INS-maintained estimate when GNSS is unavailable.
  Position reported_position;
  /// Measured distance to every peer, one entry each.
  std::vector<RangeEntry> range_row;
  /// The node's own dead-reckoned estimate; consumed by the INS fallback.
  Position ins_estimate;
  friend bool operator==(const ClientReport&, const ClientReport&) = default;
};

enum class FallbackPolicy { ins_only, all_peers };
enum class InitPolicy { reported, centroid };

std::string_view to_string(FallbackPolicy p);
std::string_view to_string(InitPolicy p);
FallbackPolicy parse_fallback_policy(std::string_view text);
InitPolicy parse_init_policy(std::string_view text);

struct DetectionParams {
  /// Pairwise consistency tolerance for Stage 1 votes, meters.
  double tau = 1.0;
  /// Stage 2 accept/replace gate on ||reported - recovered||, meters.
  double epsilon = 1.0;
  int k_max = 100;
  /// Calibrated residual alarm T = mu_e + 3 sigma_e, meters.
  double residual_threshold_T = 0.0;
  double step_tol = 1e-9;
  std::size_t min_anchors = 3;
  FallbackPolicy fallback = FallbackPolicy::ins_only;
  InitPolicy init = InitPolicy::reported;
  /// Also flag nodes whose residual exceeds T (off to match the two-stage algorithm).
  bool use_residual_detector = false;

  /// Throws Error unless tau > 0, epsilon > 0, k_max >= 1, step_tol > 0.
  void validate() const;
  friend bool operator==(const DetectionParams&, const DetectionParams&) = default;
};

struct VoteTally {
  NodeId node_id = 0;
  int votes = 0;
  bool flagged = false;
  friend bool operator==(const VoteTally&, const VoteTally&) = default;
};

enum class Provenance { accepted_report, multilaterated, ins_fallback };
std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

struct VerificationOutcome {
  NodeId node_id = 0;
  Position verified_position;
  bool faulty = false;
  Provenance provenance = Provenance::accepted_report;
  /// Range-residual RMS of the report against unflagged peers.
  double residual = 0.0;
  /// ||reported - recovered||; zero for nodes never flagged in Stage 1.
  double deviation = 0.0;
  /// Stage 1 flag before Stage 2 refinement.
  bool stage1_flagged = false;
  int votes = 0;
  friend bool operator==(const VerificationOutcome&, const VerificationOutcome&) = default;
};

/// Leader work on the verification path. distance_evaluations counts the
/// distance checks: every ordered pair in Stage 1, each residual term, and one
/// check per anchor for each recovery. Solver iterations are bounded by k_max
/// and tallied separately in solver_evaluations.
struct OpCounter {
  std::uint64_t distance_evaluations = 0;
  std::uint64_t solver_evaluations = 0;
};

/// An anchor for multilateration: trusted position and measured range to the target.
struct Anchor {
  Position position;
  double meters = 0.0;
};

struct MultilaterationResult {
  Position position;
  bool converged = false;
  int iterations = 0;
  /// Anchor set is collinear (or coincident); the solution is not identifiable.
  bool degenerate = false;
  /// Robust objective after each accepted step of the winning run, starting
  /// with the value at that run's start.
  std::vector<double> objective_history;
  std::uint64_t distance_evaluations = 0;
};

/// Soft-L1 robust loss on a squared residual: 2 (sqrt(1 + s) - 1).
double soft_l1(double squared_residual);

/// Sum over anchors of soft_l1((||q - x_j|| - d_j)^2).
double multilateration_objective(std::span<const Anchor> anchors, const Position& q);

/// Stage 1: v_A = sum over B != A of +1 if | ||rep_A - rep_B|| - d_AB | < tau
/// else -1; flagged iff v_A < 0. Reports must be indexed 0..n-1 in order.
std::vector<VoteTally> compute_votes(std::span<const ClientReport> reports, const RangeMatrix& ranges,
                                     double tau, OpCounter* ops = nullptr);

/// sqrt(mean_j (||reported - x_j|| - d_j)^2). Throws on an empty peer set.
double residual(const ClientReport& report, std::span<const Anchor> verified_peers);

/// Iteratively reweighted Gauss-Newton on the soft-L1 range objective with
/// Levenberg-Marquardt damping, run from `init` and from the linearized
/// least-squares point; the lower final objective wins. Each run stops when a
/// step is shorter than step_tol or after k_max iterations. Throws Error("insufficient anchors") when fewer than
/// params.min_anchors anchors are given.
MultilaterationResult multilaterate(std::span<const Anchor> anchors, const Position& init,
                                    const DetectionParams& params);

/// Leader-side two-stage verification: pairwise voting, then multilateration
/// of flagged nodes from unflagged anchors. `ins_estimates[i]` backs the INS
/// fallback for node i. Outcomes are returned in node order.
std::vector<VerificationOutcome> verify_and_recover(std::span<const ClientReport> reports,
                                                    const RangeMatrix& ranges,
                                                    std::span<const Position> ins_estimates,
                                                    const DetectionParams& params,
                                                    OpCounter* ops = nullptr);

/// Reports built from node states: reported position = GNSS reading.
std::vector<ClientReport> build_reports(std::span<const NodeState> states, const RangeMatrix& ranges);

/// Re-assembles a range matrix from the reports' rows; d[i][j] comes from the
/// row of min(i, j).
RangeMatrix ranges_from_reports(std::span<const ClientReport> reports);

}  // namespace swarmraft
