#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarmraft/calibration.hpp"
#include "swarmraft/cluster.hpp"
#include "swarmraft/harness.hpp"

namespace swarmraft {

/// CSV column order, fixed.
const std::vector<std::string>& csv_columns();

std::string summary_to_csv(const SweepSummary& summary);
nlohmann::ordered_json to_json(const SweepSummary& summary);
/// Inverse of to_json(SweepSummary). Throws Error on malformed input.
SweepSummary summary_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const TrialResult& t);
TrialResult trial_from_json(const nlohmann::json& j);
/// One JSON object per line.
std::string trials_to_jsonl(std::span<const TrialResult> trials);

nlohmann::ordered_json to_json(const CalibrationResult& r, std::size_t histogram_bins = 20);

/// Per-node figure data for one completed round: truth, report, recovery,
/// flag and provenance.
nlohmann::ordered_json snapshot_round(const World& world, const RoundResult& round);

std::string trace_to_jsonl(std::span<const raft::TraceEvent> events);

/// Writes via a sibling temporary file and rename. Throws IoError naming the path.
void write_atomic(const std::string& path, const std::string& content);

enum class ExportFormat { csv, json };
void export_results(const SweepSummary& summary, ExportFormat format, const std::string& path);

}  // namespace swarmraft
