#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "swarmraft/geometry.hpp"
#include "swarmraft/random.hpp"
#include "swarmraft/verification.hpp"

namespace swarmraft::raft {

using Tick = std::uint64_t;
using Term = std::uint64_t;
/// 1-based log position; 0 means "before the first entry".
using LogIndex = std::size_t;

enum class Role { follower, candidate, leader };
std::string_view to_string(Role role);

/// The leader's verified positions and flags for one round.
struct FinalizedRound {
  std::uint64_t round = 0;
  std::vector<VerificationOutcome> outcomes;
  friend bool operator==(const FinalizedRound&, const FinalizedRound&) = default;
};

struct LogEntry {
  Term term = 0;
  FinalizedRound payload;
  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

struct RequestVote {
  Term term = 0;
  LogIndex last_log_index = 0;
  Term last_log_term = 0;
};

struct VoteGranted {
  Term term = 0;
  bool granted = false;
};

struct AppendEntries {
  Term term = 0;
  LogIndex prev_log_index = 0;
  Term prev_log_term = 0;
  std::vector<LogEntry> entries;
  LogIndex leader_commit = 0;
};

struct AppendAck {
  Term term = 0;
  bool success = false;
  LogIndex match_index = 0;
};

struct ClientReportMessage {
  std::uint64_t round = 0;
  ClientReport report;
};

struct FinalizedBroadcast {
  FinalizedRound finalized;
};

using Message = std::variant<RequestVote, VoteGranted, AppendEntries, AppendAck, ClientReportMessage,
                             FinalizedBroadcast>;

std::string_view message_name(const Message& m);

/// A message in flight. Sent at tick `round`, delivered at `round + 1`.
struct Envelope {
  NodeId from = 0;
  NodeId to = 0;
  Tick round = 0;
  Message message;
};

/// Inclusive range for randomized election timeouts, in ticks.
struct TimeoutRange {
  int min = 4;
  int max = 8;
  friend bool operator==(const TimeoutRange&, const TimeoutRange&) = default;
};

struct RaftNode {
  NodeId id = 0;
  std::size_t cluster_size = 0;
  Term current_term = 0;
  std::optional<NodeId> voted_for;
  Role role = Role::follower;
  std::vector<LogEntry> log;
  /// Number of committed entries (log indices 1..commit_index).
  LogIndex commit_index = 0;
  int election_timeout = 0;
  int elapsed = 0;
  std::optional<NodeId> leader_hint;
  TimeoutRange timeouts;
  RandomStream rng{0};

  // Candidate state.
  std::vector<bool> votes_from;
  // Leader state, indexed by peer id.
  std::vector<LogIndex> next_index;
  std::vector<LogIndex> match_index;

  // Application traffic addressed to this node.
  std::vector<ClientReportMessage> collected_reports;
  std::optional<FinalizedRound> last_finalized;

  static RaftNode make(NodeId id, std::size_t cluster_size, TimeoutRange timeouts, Seed seed);

  LogIndex last_log_index() const { return log.size(); }
  Term last_log_term() const { return log.empty() ? 0 : log.back().term; }
  Term term_at(LogIndex index) const { return index == 0 ? 0 : log[index - 1].term; }
  std::size_t majority() const { return cluster_size / 2 + 1; }
};

struct TickResult {
  RaftNode node;
  std::vector<Envelope> outbox;
};

/// Deterministic Raft step for one lockstep tick.
///
/// Votes are decided after the whole inbox is read: a node that has not yet
/// voted in its current term grants its single vote to the most up-to-date
/// candidate among the RequestVotes it received this tick (ties broken by
/// lowest id), counting itself when it is a candidate. A candidate therefore
/// casts its self-vote one tick after announcing candidacy. Simultaneous
/// candidacies resolve in one election instead of splitting the vote.
///
/// Leaders send AppendEntries (heartbeat or replication) to every peer every
/// tick and advance commit_index on majority match for current-term entries.
TickResult tick(RaftNode node, std::span<const Envelope> inbox, Tick now);

/// Appends a payload to the leader's log. Throws Error("not leader").
LogEntry append_entry(RaftNode& leader, FinalizedRound payload);

/// Runs the verification pipeline on the collected reports and appends the
/// resulting round to the leader's log. INS fallbacks use the estimates
/// carried in the reports. Throws Error("not leader") on non-leaders.
LogEntry submit_round(RaftNode& leader, std::uint64_t round, std::span<const ClientReport> reports,
                      const DetectionParams& params, OpCounter* ops = nullptr);

}  // namespace swarmraft::raft
