#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "swarmraft/cluster.hpp"
#include "swarmraft/config.hpp"
#include "swarmraft/sensors.hpp"
#include "swarmraft/stats.hpp"
#include "swarmraft/verification.hpp"

namespace swarmraft {

/// Simulation state carried between rounds of one trial. Round 0 is the
/// secure initialization: truths known and INS estimates equal to them.
struct World {
  SwarmConfig config;
  Seed seed;
  std::size_t round = 0;
  std::vector<Position> truths;
  std::vector<Position> ins_estimates;
  std::vector<Position> velocities;
  NodeSet attacked;
  std::optional<raft::Cluster> cluster;
};

/// Samples the formation and the attacked set. Builds the Raft cluster when
/// consensus is enabled.
World init_world(const SwarmConfig& cfg, Seed trial_seed);

struct SensedRound {
  std::size_t round = 0;
  std::vector<NodeState> states;
  RangeMatrix ranges;
  std::vector<ClientReport> reports;
};

/// Sense step: advances truth and INS one round, samples GNSS and ranges,
/// then applies the configured attack.
SensedRound sense_round(World& world);

struct RoundMetrics {
  double baseline_mae = 0.0;
  double recovered_mae = 0.0;
  std::size_t true_positive_flags = 0;
  std::size_t false_positive_flags = 0;
  std::size_t false_negative_flags = 0;
  std::uint64_t leader_ops = 0;
  std::uint64_t solver_ops = 0;
  std::uint64_t node_ops = 0;
  std::uint64_t messages = 0;
  std::uint64_t ticks_to_commit = 0;
};

struct RoundResult {
  SensedRound sensed;
  std::vector<VerificationOutcome> outcomes;
  RoundMetrics metrics;
};

/// Leader-side traffic of one consensus round.
struct ReplicationStats {
  std::vector<VerificationOutcome> outcomes;
  std::uint64_t ticks_to_commit = 0;
  std::uint64_t reports_collected = 0;
  std::uint64_t finalized_sent = 0;
  std::uint64_t envelopes_total = 0;
};

/// Collect reports at the leader, verify, replicate until committed and
/// broadcast the finalized round. Elects a leader first if none is up.
/// Throws Error when no commit happens within the tick budget.
ReplicationStats replicate_round(raft::Cluster& cluster, std::uint64_t round,
                                 std::span<const ClientReport> reports, const DetectionParams& params,
                                 OpCounter* ops = nullptr);

/// Full Sense / Inform / Estimate / Evaluate / Recover / Finalize cycle.
/// Nodes recovered by multilateration reset their INS estimate to the result.
RoundResult run_round(World& world, const DetectionParams& params);

struct TrialResult {
  std::size_t n = 0;
  std::size_t f = 0;
  std::size_t trial = 0;
  double baseline_mae = 0.0;
  double recovered_mae = 0.0;
  /// Subset breakdowns; zero when the subset is empty.
  double attacked_baseline_mae = 0.0;
  double attacked_recovered_mae = 0.0;
  double honest_recovered_mae = 0.0;
  std::size_t true_positive_flags = 0;
  std::size_t false_positive_flags = 0;
  std::size_t false_negative_flags = 0;
  std::uint64_t leader_ops = 0;
  std::uint64_t solver_ops = 0;
  std::uint64_t node_ops = 0;
  std::uint64_t messages = 0;
  std::uint64_t ticks_to_commit = 0;
  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// Trial metrics from the final round of a world.
TrialResult summarize_trial(const World& world, const RoundResult& last);

/// Runs config.rounds rounds; metrics describe the final round.
TrialResult run_trial(const SwarmConfig& cfg, const DetectionParams& params, Seed trial_seed);

/// Seed of trial `index` in cell (n, f).
Seed trial_seed(Seed root, std::size_t n, std::size_t f, std::size_t index);

struct CellSummary {
  std::size_t n = 0;
  std::size_t f = 0;
  std::size_t trials = 0;
  SummaryStats baseline;
  SummaryStats recovered;
  double attacked_recovered_mean = 0.0;
  double honest_recovered_mean = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  /// Share of trials whose flags matched the attacked set exactly.
  double exact_flag_rate = 0.0;
  /// Share of trials with recovered_mae <= baseline_mae.
  double improved_rate = 0.0;
  double leader_ops_mean = 0.0;
  double node_ops_mean = 0.0;
  double tau = 0.0;
  double epsilon = 0.0;
  double threshold_T = 0.0;
  friend bool operator==(const CellSummary&, const CellSummary&) = default;
};

struct SweepSummary {
  std::vector<CellSummary> cells;
  /// Resolved configuration the sweep ran with.
  SwarmConfig config;
  friend bool operator==(const SweepSummary&, const SweepSummary&) = default;
};

CellSummary summarize_cell(std::size_t n, std::size_t f, std::span<const TrialResult> trials,
                           const DetectionParams& params);

struct SweepOptions {
  std::size_t trials = 1000;
  std::size_t jobs = 1;
  bool keep_raw = false;
};

struct SweepResult {
  SweepSummary summary;
  /// Per-trial rows ordered by (cell, trial index); filled when keep_raw is set.
  std::vector<TrialResult> raw;
};

/// Detection parameters for a swarm of size n: calibrated on an honest copy
/// of `cfg` unless every threshold is given explicitly.
DetectionParams detection_for(const SwarmConfig& cfg);

/// Full factorial sweep. Cells with f >= n are skipped; cells beyond the
/// majority bound run with attack.unsafe set.
SweepResult grid_sweep(const SwarmConfig& base, std::span<const std::size_t> n_list,
                       std::span<const std::size_t> f_list, const SweepOptions& options);

/// n = 2f + 1 for each f.
SweepResult scaling_experiment(const SwarmConfig& base, std::span<const std::size_t> f_range,
                               const SweepOptions& options);

}  // namespace swarmraft
