#include "swarmraft/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <map>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "swarmraft/calibration.hpp"
#include "swarmraft/cluster.hpp"
#include "swarmraft/config.hpp"
#include "swarmraft/error.hpp"
#include "swarmraft/export.hpp"
#include "swarmraft/harness.hpp"

namespace swarmraft::cli {
namespace {

struct Common {
  std::string config_path;
  std::string output_dir = ".";
  int verbosity = 0;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App& sub, Common& common) {
  sub.add_option("-c,--config", common.config_path, "Config file (key = value lines)");
  sub.add_option("-o,--output-dir", common.output_dir, "Directory for output files");
  sub.add_flag("-v,--verbose", common.verbosity, "More console output (repeatable)");
  // One flag per config key; these win over the file.
  for (const auto& key : config_keys()) {
    sub.add_option("--" + key, common.overrides[key], "Override config key " + key);
  }
}

SwarmConfig resolve_config(const Common& common) {
  SwarmConfig cfg = common.config_path.empty() ? SwarmConfig{} : load_config(common.config_path);
  for (const auto& [key, value] : common.overrides) {
    if (!value.empty()) apply_override(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

std::string out_path(const Common& common, const std::string& name) {
  return (std::filesystem::path(common.output_dir) / name).string();
}

std::size_t parse_count(std::string_view text) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw Error(fmt::format("invalid count '{}'", text));
  return v;
}

// "1,3,5" or "1-8" or a mix such as "3,5-9".
std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  std::string_view rest(text);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = rest.substr(0, comma);
    if (const auto dash = item.find('-'); dash != std::string_view::npos) {
      const auto lo = parse_count(item.substr(0, dash));
      const auto hi = parse_count(item.substr(dash + 1));
      if (hi < lo) throw Error(fmt::format("empty range '{}'", item));
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(parse_count(item));
    }
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (out.empty()) throw Error("empty list");
  return out;
}

nlohmann::ordered_json params_json(const DetectionParams& p) {
  return {{"tau", p.tau},
          {"epsilon", p.epsilon},
          {"residual_threshold_T", p.residual_threshold_T},
          {"k_max", p.k_max},
          {"step_tol", p.step_tol},
          {"min_anchors", p.min_anchors},
          {"fallback", to_string(p.fallback)},
          {"init", to_string(p.init)},
          {"use_residual_detector", p.use_residual_detector}};
}

int cmd_calibrate(const Common& common, std::optional<std::size_t> trials, std::ostream& out) {
  const SwarmConfig cfg = resolve_config(common);
  if (cfg.f > 0) throw Error("calibration requires honest configuration");
  const Seed cal_seed{derive_seed(cfg.seed, {static_cast<std::uint64_t>(StreamTag::calibration), cfg.n})};
  const auto result = calibrate_threshold(cfg, trials.value_or(cfg.detection.calibration_trials), cal_seed);
  nlohmann::ordered_json j;
  j["config"] = to_json(cfg);
  j["calibration"] = to_json(result);
  j["detection"] = params_json(resolve_detection(cfg.detection, result.T));
  const auto path = out_path(common, "calibration.json");
  write_atomic(path, j.dump(2) + "\n");
  fmt::print(out, "mu_e={:.6f} sigma_e={:.6f} T={:.6f} samples={} exceedance={:.4f}\n", result.mu_e, result.sigma_e,
             result.T, result.residuals.size(), j["calibration"]["exceedance_rate"].get<double>());
  if (common.verbosity > 0) fmt::print(out, "wrote {}\n", path);
  return kExitOk;
}

int cmd_simulate(const Common& common, std::ostream& out) {
  const SwarmConfig cfg = resolve_config(common);
  const DetectionParams params = detection_for(cfg);
  World world = init_world(cfg, trial_seed(cfg.seed, cfg.n, cfg.f, 0));
  RoundResult last;
  for (std::size_t r = 0; r < cfg.rounds; ++r) last = run_round(world, params);
  const TrialResult trial = summarize_trial(world, last);

  nlohmann::ordered_json snapshot;
  snapshot["config"] = to_json(cfg);
  snapshot["detection"] = params_json(params);
  snapshot["snapshot"] = snapshot_round(world, last);
  write_atomic(out_path(common, "snapshot.json"), snapshot.dump(2) + "\n");

  nlohmann::ordered_json result;
  result["config"] = to_json(cfg);
  result["detection"] = params_json(params);
  result["trial"] = to_json(trial);
  write_atomic(out_path(common, "trial.json"), result.dump(2) + "\n");

  const auto flagged = static_cast<std::size_t>(std::count_if(last.outcomes.begin(), last.outcomes.end(),
                                                              [](const auto& o) { return o.faulty; }));
  const auto recovered = static_cast<std::size_t>(
      std::count_if(last.outcomes.begin(), last.outcomes.end(),
                    [](const auto& o) { return o.provenance != Provenance::accepted_report; }));
  fmt::print(out, "n={} f={} flagged={} recovered={} baseline_mae={:.6f} recovered_mae={:.6f}\n", cfg.n, cfg.f,
             flagged, recovered, trial.baseline_mae, trial.recovered_mae);
  if (common.verbosity > 0) {
    for (const auto& o : last.outcomes) {
      fmt::print(out, "  node {:>2} votes={:>3} {} {}\n", o.node_id, o.votes, o.faulty ? "FAULTY" : "ok    ",
                 to_string(o.provenance));
    }
  }
  return kExitOk;
}

void write_sweep(const Common& common, const std::string& stem, const SweepResult& result, bool raw,
                 std::ostream& out) {
  export_results(result.summary, ExportFormat::csv, out_path(common, stem + ".csv"));
  export_results(result.summary, ExportFormat::json, out_path(common, stem + ".json"));
  if (raw) write_atomic(out_path(common, stem + "_trials.jsonl"), trials_to_jsonl(result.raw));
  fmt::print(out, "{:>3} {:>3} {:>14} {:>14} {:>16} {:>10}\n", "n", "f", "baseline_mean", "recovered_mean",
             "attacked_rec_mean", "exact_flags");
  for (const auto& c : result.summary.cells) {
    fmt::print(out, "{:>3} {:>3} {:>14.4f} {:>14.4f} {:>16.4f} {:>10.3f}\n", c.n, c.f, c.baseline.mean,
               c.recovered.mean, c.attacked_recovered_mean, c.exact_flag_rate);
  }
}

int cmd_sweep(const Common& common, const std::string& n_list, const std::string& f_list, std::size_t trials,
              std::size_t jobs, bool raw, std::ostream& out) {
  const SwarmConfig cfg = resolve_config(common);
  const auto ns = parse_counts(n_list);
  const auto fs = parse_counts(f_list);
  const auto result = grid_sweep(cfg, ns, fs, {trials, jobs, raw});
  write_sweep(common, "sweep", result, raw, out);
  return kExitOk;
}

int cmd_scaling(const Common& common, const std::string& f_range, std::size_t trials, std::size_t jobs, bool raw,
                std::ostream& out) {
  const SwarmConfig cfg = resolve_config(common);
  const auto result = scaling_experiment(cfg, parse_counts(f_range), {trials, jobs, raw});
  write_sweep(common, "scaling", result, raw, out);
  return kExitOk;
}

// "leader@10+5" or "3@10+5": target, start tick, duration.
raft::CrashSpec parse_crash(const std::string& text) {
  const auto at = text.find('@');
  const auto plus = text.find('+', at == std::string::npos ? 0 : at);
  if (at == std::string::npos || plus == std::string::npos) {
    throw Error(fmt::format("crash '{}' must look like leader@10+5 or 2@10+5", text));
  }
  raft::CrashSpec spec;
  const std::string target = text.substr(0, at);
  if (target != "leader") spec.node = parse_count(target);
  spec.start = parse_count(std::string_view(text).substr(at + 1, plus - at - 1));
  spec.duration = parse_count(std::string_view(text).substr(plus + 1));
  return spec;
}

int cmd_raft_demo(const Common& common, std::size_t ticks, std::size_t submit_every,
                  const std::vector<std::string>& crashes, std::ostream& out) {
  SwarmConfig cfg = common.config_path.empty() ? SwarmConfig{} : load_config(common.config_path);
  for (const auto& [key, value] : common.overrides) {
    if (!value.empty()) apply_override(cfg, key, value);
  }
  if (cfg.n < 3) throw Error("raft-demo needs at least 3 nodes");
  if (cfg.raft_timeouts.min < 1 || cfg.raft_timeouts.max < cfg.raft_timeouts.min) {
    throw Error("raft election timeouts need 1 <= min <= max");
  }
  if (submit_every < 1) throw Error("--submit-every must be at least 1");

  raft::Cluster cluster(cfg.n, cfg.raft_timeouts, cfg.seed, true);
  for (const auto& c : crashes) cluster.schedule_crash(parse_crash(c));

  const std::size_t majority = cfg.n / 2 + 1;
  std::uint64_t round = 0;
  bool commit_without_quorum = false;
  for (std::size_t t = 0; t < ticks; ++t) {
    if (auto leader = cluster.leader(); leader && t % submit_every == 0) {
      raft::append_entry(cluster.node_mut(*leader), raft::FinalizedRound{++round, {}});
    }
    std::vector<raft::LogIndex> before;
    for (NodeId id = 0; id < cfg.n; ++id) before.push_back(cluster.node(id).commit_index);
    cluster.step();
    // Liveness may stall without a quorum, but no leader may commit then.
    if (cluster.alive_count() < majority) {
      for (NodeId id = 0; id < cfg.n; ++id) {
        const auto& node = cluster.node(id);
        if (node.role == raft::Role::leader && node.commit_index > before[id]) commit_without_quorum = true;
      }
    }
  }

  const bool safety = cluster.violations().empty() && election_safety_holds(cluster.leader_changes());
  const auto samples = reelection_delays(cluster, cluster.now());
  const auto bound = static_cast<raft::Tick>(cfg.raft_timeouts.max) + 2;
  bool bounded = true;
  nlohmann::ordered_json sample_json = nlohmann::ordered_json::array();
  for (const auto& s : samples) {
    if (s.applicable && (!s.ticks_to_new_leader || *s.ticks_to_new_leader > bound)) bounded = false;
    sample_json.push_back({{"node", s.crash.node},
                           {"start", s.crash.start},
                           {"end", s.crash.end},
                           {"applicable", s.applicable},
                           {"resumed_early", s.resumed_early},
                           {"ticks_to_new_leader", s.ticks_to_new_leader ? nlohmann::json(*s.ticks_to_new_leader)
                                                                         : nlohmann::json(nullptr)}});
  }
  const bool pass = safety && bounded && !commit_without_quorum;

  nlohmann::ordered_json verdict;
  verdict["config"] = to_json(cfg);
  verdict["ticks"] = ticks;
  verdict["crashes"] = crashes;
  verdict["election_safety"] = safety;
  verdict["bounded_reelection"] = bounded;
  verdict["reelection_bound_ticks"] = bound;
  verdict["commit_without_quorum"] = commit_without_quorum;
  verdict["reelections"] = sample_json;
  verdict["leader_changes"] = nlohmann::ordered_json::array();
  for (const auto& c : cluster.leader_changes()) {
    verdict["leader_changes"].push_back({{"tick", c.tick}, {"term", c.term}, {"leader", c.leader}});
  }
  verdict["violations"] = cluster.violations();
  verdict["messages"] = cluster.counters().sent_by_type;
  verdict["verdict"] = pass ? "PASS" : "FAIL";
  write_atomic(out_path(common, "raft_trace.jsonl"), trace_to_jsonl(cluster.trace()));
  write_atomic(out_path(common, "raft_verdict.json"), verdict.dump(2) + "\n");

  fmt::print(out, "leaders={} election_safety={} bounded_reelection={} quorum_respected={} verdict={}\n",
             cluster.leader_changes().size(), safety ? "ok" : "violated", bounded ? "ok" : "violated",
             commit_without_quorum ? "no" : "yes", pass ? "PASS" : "FAIL");
  return pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Leader-coordinated GNSS spoofing detection and recovery simulator", "swarmraft"};
  app.require_subcommand(1);

  // Each subcommand binds its own storage; CLI11 resets flags of subcommands that were not used.
  Common cal_common, sim_common, sweep_common, scaling_common, demo_common;

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate the honest residual threshold T");
  add_common(*calibrate, cal_common);
  std::optional<std::size_t> cal_trials;
  calibrate->add_option("--trials", cal_trials, "Honest rounds (default detection.calibration_trials)");

  auto* simulate = app.add_subcommand("simulate", "Run one trial and write snapshot and result files");
  add_common(*simulate, sim_common);

  std::string n_list = "3,5,7,9,11,13,15,17";
  std::string f_list = "1-8";
  std::size_t sweep_trials = 1000;
  std::size_t sweep_jobs = 1;
  bool sweep_raw = false;
  auto* sweep = app.add_subcommand("sweep", "Grid sweep over swarm sizes and attacker counts");
  add_common(*sweep, sweep_common);
  sweep->add_option("--n-list", n_list, "Swarm sizes, e.g. 3,5,7 or 3-9")->capture_default_str();
  sweep->add_option("--f-list", f_list, "Attacker counts")->capture_default_str();
  sweep->add_option("--trials", sweep_trials, "Trials per cell")->capture_default_str();
  sweep->add_option("--jobs", sweep_jobs, "Worker threads")->capture_default_str();
  sweep->add_flag("--raw", sweep_raw, "Also write per-trial JSON lines");

  std::string f_range = "1-8";
  std::size_t scaling_trials = 1000;
  std::size_t scaling_jobs = 1;
  bool scaling_raw = false;
  auto* scaling = app.add_subcommand("scaling", "Scaling experiment with n = 2f + 1");
  add_common(*scaling, scaling_common);
  scaling->add_option("--f-range", f_range, "Attacker counts")->capture_default_str();
  scaling->add_option("--trials", scaling_trials, "Trials per cell")->capture_default_str();
  scaling->add_option("--jobs", scaling_jobs, "Worker threads")->capture_default_str();
  scaling->add_flag("--raw", scaling_raw, "Also write per-trial JSON lines");

  auto* demo = app.add_subcommand("raft-demo", "Leader election and replication with scripted crashes");
  add_common(*demo, demo_common);
  std::size_t ticks = 80;
  std::size_t submit_every = 5;
  std::vector<std::string> crashes;
  demo->add_option("--ticks", ticks, "Ticks to simulate")->capture_default_str();
  demo->add_option("--submit-every", submit_every, "Leader appends a round every k ticks")->capture_default_str();
  demo->add_option("--crash", crashes, "Crash spec TARGET@START+DURATION, TARGET = node id or 'leader'");

  std::vector<std::string> reversed;
  if (args.size() > 1) reversed.assign(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*calibrate) return cmd_calibrate(cal_common, cal_trials, out);
    if (*simulate) return cmd_simulate(sim_common, out);
    if (*sweep) return cmd_sweep(sweep_common, n_list, f_list, sweep_trials, sweep_jobs, sweep_raw, out);
    if (*scaling) return cmd_scaling(scaling_common, f_range, scaling_trials, scaling_jobs, scaling_raw, out);
    if (*demo) return cmd_raft_demo(demo_common, ticks, submit_every, crashes, out);
  } catch (const IoError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitRuntime;
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace swarmraft::cli
