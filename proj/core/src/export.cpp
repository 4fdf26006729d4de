#include "swarmraft/export.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "swarmraft/error.hpp"

namespace swarmraft {

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "n",  "f",  "trials", "baseline_mean", "baseline_median", "recovered_mean", "recovered_median",
      "recovered_iqr", "tp", "fp", "fn", "leader_ops_mean", "node_ops_mean"};
  return cols;
}

std::string summary_to_csv(const SweepSummary& summary) {
  std::string out = fmt::format("{}\n", fmt::join(csv_columns(), ","));
  for (const auto& c : summary.cells) {
    out += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{},{},{:.3f},{:.3f}\n", c.n, c.f, c.trials,
                       c.baseline.mean, c.baseline.median, c.recovered.mean, c.recovered.median, c.recovered.iqr(),
                       c.tp, c.fp, c.fn, c.leader_ops_mean, c.node_ops_mean);
  }
  return out;
}

namespace {

nlohmann::ordered_json stats_json(const SummaryStats& s) {
  return {{"mean", s.mean}, {"median", s.median}, {"q1", s.q1}, {"q3", s.q3}, {"min", s.min}, {"max", s.max}};
}

SummaryStats stats_from(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("median").get<double>(), j.at("q1").get<double>(),
          j.at("q3").get<double>(),   j.at("min").get<double>(),    j.at("max").get<double>()};
}

nlohmann::json position_json(const Position& p) { return nlohmann::json::array({p.x, p.y, p.z}); }

}  // namespace

nlohmann::ordered_json to_json(const SweepSummary& summary) {
  nlohmann::ordered_json j;
  j["config"] = to_json(summary.config);
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : summary.cells) {
    nlohmann::ordered_json cell;
    cell["n"] = c.n;
    cell["f"] = c.f;
    cell["trials"] = c.trials;
    cell["baseline"] = stats_json(c.baseline);
    cell["recovered"] = stats_json(c.recovered);
    cell["attacked_recovered_mean"] = c.attacked_recovered_mean;
    cell["honest_recovered_mean"] = c.honest_recovered_mean;
    cell["tp"] = c.tp;
    cell["fp"] = c.fp;
    cell["fn"] = c.fn;
    cell["exact_flag_rate"] = c.exact_flag_rate;
    cell["improved_rate"] = c.improved_rate;
    cell["leader_ops_mean"] = c.leader_ops_mean;
    cell["node_ops_mean"] = c.node_ops_mean;
    cell["tau"] = c.tau;
    cell["epsilon"] = c.epsilon;
    cell["threshold_T"] = c.threshold_T;
    j["cells"].push_back(std::move(cell));
  }
  return j;
}

SweepSummary summary_from_json(const nlohmann::json& j) {
  try {
    SweepSummary s;
    for (const auto& [key, value] : j.at("config").items()) apply_override(s.config, key, value.get<std::string>());
    for (const auto& cell : j.at("cells")) {
      CellSummary c;
      c.n = cell.at("n").get<std::size_t>();
      c.f = cell.at("f").get<std::size_t>();
      c.trials = cell.at("trials").get<std::size_t>();
      c.baseline = stats_from(cell.at("baseline"));
      c.recovered = stats_from(cell.at("recovered"));
      c.attacked_recovered_mean = cell.at("attacked_recovered_mean").get<double>();
      c.honest_recovered_mean = cell.at("honest_recovered_mean").get<double>();
      c.tp = cell.at("tp").get<std::uint64_t>();
      c.fp = cell.at("fp").get<std::uint64_t>();
      c.fn = cell.at("fn").get<std::uint64_t>();
      c.exact_flag_rate = cell.at("exact_flag_rate").get<double>();
      c.improved_rate = cell.at("improved_rate").get<double>();
      c.leader_ops_mean = cell.at("leader_ops_mean").get<double>();
      c.node_ops_mean = cell.at("node_ops_mean").get<double>();
      c.tau = cell.at("tau").get<double>();
      c.epsilon = cell.at("epsilon").get<double>();
      c.threshold_T = cell.at("threshold_T").get<double>();
      s.cells.push_back(c);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("malformed summary JSON: {}", e.what()));
  }
}

nlohmann::ordered_json to_json(const TrialResult& t) {
  nlohmann::ordered_json j;
  j["n"] = t.n;
  j["f"] = t.f;
  j["trial"] = t.trial;
  j["baseline_mae"] = t.baseline_mae;
  j["recovered_mae"] = t.recovered_mae;
  j["attacked_baseline_mae"] = t.attacked_baseline_mae;
  j["attacked_recovered_mae"] = t.attacked_recovered_mae;
  j["honest_recovered_mae"] = t.honest_recovered_mae;
  j["tp"] = t.true_positive_flags;
  j["fp"] = t.false_positive_flags;
  j["fn"] = t.false_negative_flags;
  j["leader_ops"] = t.leader_ops;
  j["solver_ops"] = t.solver_ops;
  j["node_ops"] = t.node_ops;
  j["messages"] = t.messages;
  j["ticks_to_commit"] = t.ticks_to_commit;
  return j;
}

TrialResult trial_from_json(const nlohmann::json& j) {
  try {
    TrialResult t;
    t.n = j.at("n").get<std::size_t>();
    t.f = j.at("f").get<std::size_t>();
    t.trial = j.at("trial").get<std::size_t>();
    t.baseline_mae = j.at("baseline_mae").get<double>();
    t.recovered_mae = j.at("recovered_mae").get<double>();
    t.attacked_baseline_mae = j.at("attacked_baseline_mae").get<double>();
    t.attacked_recovered_mae = j.at("attacked_recovered_mae").get<double>();
    t.honest_recovered_mae = j.at("honest_recovered_mae").get<double>();
    t.true_positive_flags = j.at("tp").get<std::size_t>();
    t.false_positive_flags = j.at("fp").get<std::size_t>();
    t.false_negative_flags = j.at("fn").get<std::size_t>();
    t.leader_ops = j.at("leader_ops").get<std::uint64_t>();
    t.solver_ops = j.at("solver_ops").get<std::uint64_t>();
    t.node_ops = j.at("node_ops").get<std::uint64_t>();
    t.messages = j.at("messages").get<std::uint64_t>();
    t.ticks_to_commit = j.at("ticks_to_commit").get<std::uint64_t>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("malformed trial JSON: {}", e.what()));
  }
}

std::string trials_to_jsonl(std::span<const TrialResult> trials) {
  std::string out;
  for (const auto& t : trials) out += to_json(t).dump() + "\n";
  return out;
}

nlohmann::ordered_json to_json(const CalibrationResult& r, std::size_t histogram_bins) {
  nlohmann::ordered_json j;
  j["mu_e"] = r.mu_e;
  j["sigma_e"] = r.sigma_e;
  j["T"] = r.T;
  j["trials"] = r.trials;
  j["samples"] = r.residuals.size();
  j["exceedance_rate"] = r.residuals.empty() ? 0.0 : exceedance_rate(r.residuals, r.T);
  j["histogram"] = nlohmann::ordered_json::array();
  for (const auto& b : histogram(r.residuals, histogram_bins)) {
    j["histogram"].push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count}});
  }
  return j;
}

nlohmann::ordered_json snapshot_round(const World& world, const RoundResult& round) {
  nlohmann::ordered_json j;
  j["round"] = round.sensed.round;
  j["n"] = world.config.n;
  j["f"] = world.config.f;
  j["dimension"] = world.config.dimension;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& o : round.outcomes) {
    nlohmann::ordered_json node;
    node["id"] = o.node_id;
    node["true"] = position_json(world.truths[o.node_id]);
    node["reported"] = position_json(round.sensed.reports[o.node_id].reported_position);
    node["recovered"] = position_json(o.verified_position);
    node["flagged"] = o.faulty;
    node["attacked"] = round.sensed.states[o.node_id].is_attacked;
    node["provenance"] = to_string(o.provenance);
    node["votes"] = o.votes;
    node["residual"] = o.residual;
    node["deviation"] = o.deviation;
    j["nodes"].push_back(std::move(node));
  }
  return j;
}

std::string trace_to_jsonl(std::span<const raft::TraceEvent> events) {
  std::string out;
  for (const auto& e : events) out += raft::to_json(e).dump() + "\n";
  return out;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  if (ec) throw IoError(fmt::format("cannot create directory for '{}': {}", path, ec.message()));
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path));
    out << content;
    out.flush();
    if (!out) throw IoError(fmt::format("cannot write '{}'", path));
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError(fmt::format("cannot move output into place at '{}'", path));
  }
}

void export_results(const SweepSummary& summary, ExportFormat format, const std::string& path) {
  write_atomic(path, format == ExportFormat::csv ? summary_to_csv(summary) : to_json(summary).dump(2) + "\n");
}

}  // namespace swarmraft
