#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarmraft/raft.hpp"

namespace swarmraft::raft {

/// Crash a node (or whoever leads at `start`) for `duration` ticks.
struct CrashSpec {
  std::optional<NodeId> node;  // nullopt: the leader at `start`
  Tick start = 0;
  Tick duration = 1;
};

/// A crash after target resolution.
struct CrashInterval {
  NodeId node = 0;
  Tick start = 0;
  Tick end = 0;  // first tick the node is back
  bool was_leader = false;
};

enum class TraceKind { send, drop, role_change, crash, resume, commit };
std::string_view to_string(TraceKind kind);

struct TraceEvent {
  Tick tick = 0;
  TraceKind kind = TraceKind::send;
  NodeId node = 0;   // sender, or the node changing state
  NodeId peer = 0;   // receiver for send/drop
  std::string message;
  Term term = 0;
  Role role = Role::follower;
  LogIndex index = 0;
};

nlohmann::json to_json(const TraceEvent& e);

/// A leader taking office.
struct LeaderChange {
  Tick tick = 0;
  Term term = 0;
  NodeId leader = 0;
};

struct MessageCounters {
  std::map<std::string, std::uint64_t> sent_by_type;
  std::uint64_t total_sent = 0;
  std::uint64_t dropped = 0;
};

/// Lockstep, loss-free network of RaftNodes. Each step() runs one tick:
/// nodes are processed in id order, every message sent during tick t is
/// delivered at t + 1, and crashed nodes neither receive nor send.
class Cluster {
 public:
  Cluster(std::size_t n, TimeoutRange timeouts, Seed seed, bool record_trace = false);

  void schedule_crash(const CrashSpec& spec);
  void step();

  /// Tick that the next step() will execute.
  Tick now() const { return now_; }
  std::size_t size() const { return nodes_.size(); }
  bool alive(NodeId id) const;
  std::size_t alive_count() const;
  const RaftNode& node(NodeId id) const { return nodes_.at(id); }
  RaftNode& node_mut(NodeId id) { return nodes_.at(id); }
  const TimeoutRange& timeouts() const { return timeouts_; }

  /// Live leader with the highest term, if any.
  std::optional<NodeId> leader() const;

  /// Queues an application message for delivery in the next step().
  void send(NodeId from, NodeId to, Message message);

  const std::vector<TraceEvent>& trace() const { return trace_; }
  const std::vector<LeaderChange>& leader_changes() const { return leader_changes_; }
  const std::vector<CrashInterval>& crashes() const { return resolved_; }
  const MessageCounters& counters() const { return counters_; }
  /// Highest commit index observed on any node, with the term of that entry.
  const std::vector<Term>& committed_terms() const { return committed_terms_; }

  /// Violations of election safety, log matching and leader completeness
  /// seen so far; empty when all invariants held at every tick.
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  void record(TraceEvent e);
  void check_invariants();

  std::vector<RaftNode> nodes_;
  TimeoutRange timeouts_;
  Tick now_ = 1;
  std::vector<std::vector<Envelope>> pending_;
  std::vector<CrashSpec> scheduled_;
  std::vector<CrashInterval> resolved_;
  std::vector<Tick> down_until_;
  bool record_trace_ = false;
  std::vector<TraceEvent> trace_;
  std::vector<LeaderChange> leader_changes_;
  std::map<Term, NodeId> leader_of_term_;
  std::vector<Term> committed_terms_;
  MessageCounters counters_;
  std::vector<std::string> violations_;
};

/// True when no term ever had two distinct leaders.
bool election_safety_holds(const std::vector<LeaderChange>& changes);

/// For each crash of a sitting leader, the number of ticks until the next
/// election produced a leader; nullopt when none appeared before `horizon`.
/// A sample is applicable when, over the window of max timeout + 2 ticks, a
/// live majority holds, no further crash starts, and the old leader stays
/// down. A leader that resumes mid-election with a longer log can refuse the
/// candidates and force another term, so no bound holds for those blips;
/// `resumed_early` marks them.
struct ReelectionSample {
  CrashInterval crash;
  std::optional<Tick> ticks_to_new_leader;
  bool applicable = false;
  bool resumed_early = false;
};
std::vector<ReelectionSample> reelection_delays(const Cluster& cluster, Tick horizon);

}  // namespace swarmraft::raft
