#include "swarmraft/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "swarmraft/attacks.hpp"
#include "swarmraft/calibration.hpp"
#include "swarmraft/error.hpp"

namespace swarmraft {

World init_world(const SwarmConfig& cfg, Seed seed) {
  cfg.validate();
  World w;
  w.config = cfg;
  w.seed = seed;
  auto placement = RandomStream::derive(seed, StreamTag::placement);
  w.truths = sample_formation(cfg.n, cfg.dimension, cfg.bounding_box, cfg.min_separation, placement);
  w.ins_estimates = w.truths;
  w.velocities.assign(cfg.n, Position{});
  if (cfg.motion == MotionModel::constant_velocity) {
    for (NodeId i = 0; i < cfg.n; ++i) {
      auto rng = RandomStream::derive(seed, StreamTag::motion, i);
      w.velocities[i] = cfg.speed * random_unit_vector(rng, cfg.dimension);
    }
  }
  auto selection = RandomStream::derive(seed, StreamTag::attack_selection);
  w.attacked = select_attacked(cfg.n, cfg.f, selection);
  if (cfg.consensus_enabled) w.cluster.emplace(cfg.n, cfg.raft_timeouts, seed);
  return w;
}

SensedRound sense_round(World& w) {
  const SwarmConfig& cfg = w.config;
  const std::size_t k = ++w.round;
  SensedRound out;
  out.round = k;
  out.states.resize(cfg.n);
  for (NodeId i = 0; i < cfg.n; ++i) {
    w.truths[i] += w.velocities[i];
    auto ins_rng = RandomStream::derive(w.seed, StreamTag::ins, k, i);
    w.ins_estimates[i] = propagate_ins(w.ins_estimates[i], MotionIncrement{w.velocities[i]}, cfg.r_ins, ins_rng);
    auto gnss_rng = RandomStream::derive(w.seed, StreamTag::gnss, k, i);
    out.states[i] = NodeState{i, w.truths[i], w.ins_estimates[i], sample_gnss(w.truths[i], cfg.r_gnss, gnss_rng), false};
  }
  auto range_rng = RandomStream::derive(w.seed, StreamTag::ranges, k);
  out.ranges = measure_ranges(w.truths, cfg.sigma_d, range_rng);

  if (!w.attacked.empty()) {
    // One offset lineage per trial, so a spoofer keeps its direction across rounds.
    auto offset_rng = RandomStream::derive(w.seed, StreamTag::attack_offset);
    const auto spoof = [&] {
      out.states = cfg.attack.colluding
                       ? apply_collusion(std::move(out.states), w.attacked, cfg.attack, offset_rng, cfg.dimension, k)
                       : apply_gnss_spoof(std::move(out.states), w.attacked, cfg.attack, offset_rng, cfg.dimension, k);
    };
    const auto tamper = [&] {
      for (NodeId i : w.attacked) out.states[i].is_attacked = true;
      out.ranges = apply_range_tamper(std::move(out.ranges), pairs_touching(w.attacked, cfg.n), cfg.attack.range_bias);
    };
    switch (cfg.attack.mode) {
      case AttackMode::gnss_spoof:
      case AttackMode::collusion: spoof(); break;
      case AttackMode::range_tamper: tamper(); break;
      case AttackMode::mixed:
        spoof();
        tamper();
        break;
    }
  }
  out.reports = build_reports(out.states, out.ranges);
  return out;
}

ReplicationStats replicate_round(raft::Cluster& cluster, std::uint64_t round,
                                 std::span<const ClientReport> reports, const DetectionParams& params,
                                 OpCounter* ops) {
  const std::uint64_t budget = 10 * static_cast<std::uint64_t>(cluster.timeouts().max + 3) + cluster.size();
  const std::uint64_t sent_before = cluster.counters().total_sent;
  std::uint64_t spent = 0;
  auto advance = [&] {
    if (++spent > budget) throw Error("consensus round did not complete within the tick budget");
    cluster.step();
  };
  while (!cluster.leader()) advance();
  const NodeId leader_id = *cluster.leader();
  const raft::Tick start = cluster.now();

  ReplicationStats stats;
  for (const auto& r : reports) {
    if (r.node_id == leader_id) continue;
    cluster.send(r.node_id, leader_id, raft::ClientReportMessage{round, r});
    ++stats.reports_collected;
  }
  advance();
  if (cluster.leader() != leader_id) throw Error("leader changed while collecting reports");

  auto& leader = cluster.node_mut(leader_id);
  std::vector<ClientReport> batch;
  for (const auto& msg : leader.collected_reports) {
    if (msg.round == round) batch.push_back(msg.report);
  }
  leader.collected_reports.clear();
  for (const auto& r : reports) {
    if (r.node_id == leader_id) batch.push_back(r);
  }
  raft::submit_round(leader, round, batch, params, ops);
  const raft::LogIndex index = leader.last_log_index();

  while (cluster.node(leader_id).commit_index < index) advance();
  stats.ticks_to_commit = cluster.now() - start;
  const raft::FinalizedRound finalized = cluster.node(leader_id).log[index - 1].payload;
  for (NodeId peer = 0; peer < cluster.size(); ++peer) {
    if (peer == leader_id) continue;
    cluster.send(leader_id, peer, raft::FinalizedBroadcast{finalized});
    ++stats.finalized_sent;
  }
  advance();
  stats.outcomes = finalized.outcomes;
  stats.envelopes_total = cluster.counters().total_sent - sent_before;
  return stats;
}

RoundResult run_round(World& w, const DetectionParams& params) {
  RoundResult result;
  result.sensed = sense_round(w);
  const auto& sensed = result.sensed;
  const std::size_t n = w.config.n;

  OpCounter ops;
  if (w.cluster) {
    auto stats = replicate_round(*w.cluster, sensed.round, sensed.reports, params, &ops);
    result.outcomes = std::move(stats.outcomes);
    result.metrics.messages = stats.reports_collected + stats.finalized_sent;
    result.metrics.ticks_to_commit = stats.ticks_to_commit;
  } else {
    std::vector<Position> ins;
    for (const auto& s : sensed.states) ins.push_back(s.ins_estimate);
    result.outcomes = verify_and_recover(sensed.reports, sensed.ranges, ins, params, &ops);
    result.metrics.messages = 2 * (n - 1);
  }
  if (result.outcomes.size() != n) throw Error("finalized round does not cover every node");

  std::vector<Position> reported, verified;
  for (NodeId i = 0; i < n; ++i) {
    reported.push_back(sensed.reports[i].reported_position);
    verified.push_back(result.outcomes[i].verified_position);
    const bool attacked = sensed.states[i].is_attacked;
    const bool flagged = result.outcomes[i].faulty;
    result.metrics.true_positive_flags += attacked && flagged;
    result.metrics.false_positive_flags += !attacked && flagged;
    result.metrics.false_negative_flags += attacked && !flagged;
  }
  result.metrics.baseline_mae = mean_absolute_error(reported, w.truths);
  result.metrics.recovered_mae = mean_absolute_error(verified, w.truths);
  result.metrics.leader_ops = ops.distance_evaluations;
  result.metrics.solver_ops = ops.solver_evaluations;
  // Each regular node measures one range per peer.
  result.metrics.node_ops = n - 1;

  for (const auto& o : result.outcomes) {
    if (o.provenance == Provenance::multilaterated) w.ins_estimates[o.node_id] = o.verified_position;
  }
  return result;
}

TrialResult summarize_trial(const World& w, const RoundResult& last) {
  const SwarmConfig& cfg = w.config;
  TrialResult t;
  t.n = cfg.n;
  t.f = cfg.f;
  t.baseline_mae = last.metrics.baseline_mae;
  t.recovered_mae = last.metrics.recovered_mae;
  t.true_positive_flags = last.metrics.true_positive_flags;
  t.false_positive_flags = last.metrics.false_positive_flags;
  t.false_negative_flags = last.metrics.false_negative_flags;
  t.leader_ops = last.metrics.leader_ops;
  t.solver_ops = last.metrics.solver_ops;
  t.node_ops = last.metrics.node_ops;
  t.messages = last.metrics.messages;
  t.ticks_to_commit = last.metrics.ticks_to_commit;

  std::vector<Position> att_rep, att_ver, att_true, hon_ver, hon_true;
  for (NodeId i = 0; i < cfg.n; ++i) {
    if (last.sensed.states[i].is_attacked) {
      att_rep.push_back(last.sensed.reports[i].reported_position);
      att_ver.push_back(last.outcomes[i].verified_position);
      att_true.push_back(w.truths[i]);
    } else {
      hon_ver.push_back(last.outcomes[i].verified_position);
      hon_true.push_back(w.truths[i]);
    }
  }
  if (!att_true.empty()) {
    t.attacked_baseline_mae = mean_absolute_error(att_rep, att_true);
    t.attacked_recovered_mae = mean_absolute_error(att_ver, att_true);
  }
  if (!hon_true.empty()) t.honest_recovered_mae = mean_absolute_error(hon_ver, hon_true);
  return t;
}

TrialResult run_trial(const SwarmConfig& cfg, const DetectionParams& params, Seed seed) {
  World w = init_world(cfg, seed);
  RoundResult last;
  for (std::size_t r = 0; r < cfg.rounds; ++r) last = run_round(w, params);
  return summarize_trial(w, last);
}

Seed trial_seed(Seed root, std::size_t n, std::size_t f, std::size_t index) {
  return Seed{derive_seed(root, {static_cast<std::uint64_t>(StreamTag::trial), n, f, index})};
}

CellSummary summarize_cell(std::size_t n, std::size_t f, std::span<const TrialResult> trials,
                           const DetectionParams& params) {
  if (trials.empty()) throw Error("cell summary needs at least one trial");
  CellSummary c;
  c.n = n;
  c.f = f;
  c.trials = trials.size();
  std::vector<double> base, rec, att, hon, lops, nops;
  std::size_t exact = 0, improved = 0;
  for (const auto& t : trials) {
    base.push_back(t.baseline_mae);
    rec.push_back(t.recovered_mae);
    att.push_back(t.attacked_recovered_mae);
    hon.push_back(t.honest_recovered_mae);
    lops.push_back(static_cast<double>(t.leader_ops));
    nops.push_back(static_cast<double>(t.node_ops));
    c.tp += t.true_positive_flags;
    c.fp += t.false_positive_flags;
    c.fn += t.false_negative_flags;
    exact += (t.false_positive_flags == 0 && t.false_negative_flags == 0) ? 1 : 0;
    improved += t.recovered_mae <= t.baseline_mae ? 1 : 0;
  }
  c.baseline = summarize(base);
  c.recovered = summarize(rec);
  c.attacked_recovered_mean = sample_mean(att);
  c.honest_recovered_mean = sample_mean(hon);
  c.exact_flag_rate = static_cast<double>(exact) / static_cast<double>(trials.size());
  c.improved_rate = static_cast<double>(improved) / static_cast<double>(trials.size());
  c.leader_ops_mean = sample_mean(lops);
  c.node_ops_mean = sample_mean(nops);
  c.tau = params.tau;
  c.epsilon = params.epsilon;
  c.threshold_T = params.residual_threshold_T;
  return c;
}

DetectionParams detection_for(const SwarmConfig& cfg) {
  const auto& d = cfg.detection;
  if (d.tau && d.epsilon && d.residual_threshold_T) return resolve_detection(d, *d.residual_threshold_T);
  SwarmConfig honest = cfg;
  honest.f = 0;
  const Seed cal_seed{derive_seed(cfg.seed, {static_cast<std::uint64_t>(StreamTag::calibration), cfg.n})};
  const auto cal = calibrate_threshold(honest, d.calibration_trials, cal_seed);
  return resolve_detection(d, cal.T);
}

namespace {

struct Cell {
  SwarmConfig config;
  DetectionParams params;
};

SweepResult run_cells(const SwarmConfig& base, std::vector<Cell> cells, const SweepOptions& options) {
  if (options.trials < 1) throw Error("trials per cell must be at least 1");
  const std::size_t per_cell = options.trials;
  const std::size_t total = cells.size() * per_cell;
  std::vector<TrialResult> results(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t task = next++; task < total; task = next++) {
      const auto& cell = cells[task / per_cell];
      const std::size_t index = task % per_cell;
      try {
        auto r = run_trial(cell.config, cell.params, trial_seed(base.seed, cell.config.n, cell.config.f, index));
        r.trial = index;
        results[task] = r;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(total, 1));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult out;
  out.summary.config = base;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::span<const TrialResult> slice(results.data() + c * per_cell, per_cell);
    out.summary.cells.push_back(summarize_cell(cells[c].config.n, cells[c].config.f, slice, cells[c].params));
  }
  if (options.keep_raw) out.raw = std::move(results);
  return out;
}

Cell make_cell(const SwarmConfig& base, std::size_t n, std::size_t f) {
  Cell cell{base, {}};
  cell.config.n = n;
  cell.config.f = f;
  if (2 * f + 1 > n) cell.config.attack.unsafe = true;
  cell.config.validate();
  cell.params = detection_for(cell.config);
  return cell;
}

}  // namespace

SweepResult grid_sweep(const SwarmConfig& base, std::span<const std::size_t> n_list,
                       std::span<const std::size_t> f_list, const SweepOptions& options) {
  std::vector<Cell> cells;
  for (std::size_t n : n_list) {
    for (std::size_t f : f_list) {
      if (f >= n) continue;
      cells.push_back(make_cell(base, n, f));
    }
  }
  return run_cells(base, std::move(cells), options);
}

SweepResult scaling_experiment(const SwarmConfig& base, std::span<const std::size_t> f_range,
                               const SweepOptions& options) {
  if (f_range.empty()) throw Error("f_range must not be empty");
  std::vector<Cell> cells;
  for (std::size_t f : f_range) cells.push_back(make_cell(base, 2 * f + 1, f));
  return run_cells(base, std::move(cells), options);
}

}  // namespace swarmraft
