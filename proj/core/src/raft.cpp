#include "swarmraft/raft.hpp"

#include <algorithm>
#include <tuple>

#include "swarmraft/error.hpp"

namespace swarmraft::raft {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::follower: return "follower";
    case Role::candidate: return "candidate";
    case Role::leader: return "leader";
  }
  return "follower";
}

std::string_view message_name(const Message& m) {
  struct Namer {
    std::string_view operator()(const RequestVote&) const { return "RequestVote"; }
    std::string_view operator()(const VoteGranted&) const { return "VoteGranted"; }
    std::string_view operator()(const AppendEntries&) const { return "AppendEntries"; }
    std::string_view operator()(const AppendAck&) const { return "AppendAck"; }
    std::string_view operator()(const ClientReportMessage&) const { return "ClientReport"; }
    std::string_view operator()(const FinalizedBroadcast&) const { return "FinalizedBroadcast"; }
  };
  return std::visit(Namer{}, m);
}

namespace {

int draw_timeout(RaftNode& node) {
  return static_cast<int>(node.rng.uniform_int(static_cast<std::uint64_t>(node.timeouts.min),
                                               static_cast<std::uint64_t>(node.timeouts.max)));
}

void become_follower(RaftNode& node) {
  node.role = Role::follower;
  node.votes_from.assign(node.cluster_size, false);
  node.next_index.clear();
  node.match_index.clear();
  node.collected_reports.clear();
  node.election_timeout = draw_timeout(node);
}

void become_leader(RaftNode& node) {
  node.role = Role::leader;
  node.leader_hint = node.id;
  node.next_index.assign(node.cluster_size, node.last_log_index() + 1);
  node.match_index.assign(node.cluster_size, 0);
  node.match_index[node.id] = node.last_log_index();
}

void start_election(RaftNode& node, Tick now, std::vector<Envelope>& out) {
  node.current_term += 1;
  node.role = Role::candidate;
  node.voted_for.reset();
  node.leader_hint.reset();
  node.votes_from.assign(node.cluster_size, false);
  node.elapsed = 0;
  node.election_timeout = draw_timeout(node);
  for (NodeId peer = 0; peer < node.cluster_size; ++peer) {
    if (peer == node.id) continue;
    out.push_back({node.id, peer, now,
                   RequestVote{node.current_term, node.last_log_index(), node.last_log_term()}});
  }
}

// Candidate preference: most up-to-date log first, then the lowest id.
using Rank = std::tuple<Term, LogIndex, std::int64_t>;
Rank rank_of(Term last_term, LogIndex last_index, NodeId id) {
  return {last_term, last_index, -static_cast<std::int64_t>(id)};
}

void handle_append(RaftNode& node, NodeId from, const AppendEntries& ae, Tick now,
                   std::vector<Envelope>& out) {
  if (node.role != Role::follower) become_follower(node);
  node.leader_hint = from;
  node.elapsed = 0;

  const bool prev_ok = ae.prev_log_index <= node.log.size() &&
                       node.term_at(ae.prev_log_index) == ae.prev_log_term;
  if (!prev_ok) {
    out.push_back({node.id, from, now, AppendAck{node.current_term, false, 0}});
    return;
  }
  LogIndex index = ae.prev_log_index;
  for (const auto& entry : ae.entries) {
    ++index;
    if (index <= node.log.size()) {
      if (node.log[index - 1].term == entry.term) continue;
      node.log.resize(index - 1);
    }
    node.log.push_back(entry);
  }
  const LogIndex match = ae.prev_log_index + ae.entries.size();
  if (ae.leader_commit > node.commit_index) {
    node.commit_index = std::max(node.commit_index, std::min(ae.leader_commit, match));
  }
  out.push_back({node.id, from, now, AppendAck{node.current_term, true, match}});
}

void lead(RaftNode& node, Tick now, std::vector<Envelope>& out) {
  for (NodeId peer = 0; peer < node.cluster_size; ++peer) {
    if (peer == node.id) continue;
    AppendEntries ae;
    ae.term = node.current_term;
    ae.prev_log_index = node.next_index[peer] - 1;
    ae.prev_log_term = node.term_at(ae.prev_log_index);
    ae.entries.assign(node.log.begin() + static_cast<std::ptrdiff_t>(ae.prev_log_index), node.log.end());
    ae.leader_commit = node.commit_index;
    out.push_back({node.id, peer, now, std::move(ae)});
  }
  for (LogIndex candidate = node.last_log_index(); candidate > node.commit_index; --candidate) {
    if (node.term_at(candidate) != node.current_term) break;
    const auto replicas = static_cast<std::size_t>(std::count_if(
        node.match_index.begin(), node.match_index.end(), [&](LogIndex m) { return m >= candidate; }));
    if (replicas >= node.majority()) {
      node.commit_index = candidate;
      break;
    }
  }
}

}  // namespace

RaftNode RaftNode::make(NodeId id, std::size_t cluster_size, TimeoutRange timeouts, Seed seed) {
  if (timeouts.min < 1 || timeouts.max < timeouts.min) throw Error("invalid election timeout range");
  if (id >= cluster_size) throw Error("node id out of range");
  RaftNode node;
  node.id = id;
  node.cluster_size = cluster_size;
  node.timeouts = timeouts;
  node.rng = RandomStream::derive(seed, StreamTag::raft_timeouts, id);
  become_follower(node);
  return node;
}

TickResult tick(RaftNode node, std::span<const Envelope> inbox, Tick now) {
  std::vector<Envelope> out;
  node.elapsed += 1;

  auto observe_term = [&](Term term) {
    if (term > node.current_term) {
      node.current_term = term;
      node.voted_for.reset();
      node.leader_hint.reset();
      become_follower(node);
    }
  };

  std::vector<std::pair<NodeId, RequestVote>> requests;
  for (const auto& env : inbox) {
    if (const auto* rv = std::get_if<RequestVote>(&env.message)) {
      observe_term(rv->term);
      if (rv->term < node.current_term) {
        out.push_back({node.id, env.from, now, VoteGranted{node.current_term, false}});
      } else {
        requests.emplace_back(env.from, *rv);
      }
    } else if (const auto* vg = std::get_if<VoteGranted>(&env.message)) {
      observe_term(vg->term);
      if (node.role == Role::candidate && vg->term == node.current_term && vg->granted) {
        node.votes_from[env.from] = true;
      }
    } else if (const auto* ae = std::get_if<AppendEntries>(&env.message)) {
      observe_term(ae->term);
      if (ae->term < node.current_term) {
        out.push_back({node.id, env.from, now, AppendAck{node.current_term, false, 0}});
      } else {
        handle_append(node, env.from, *ae, now, out);
      }
    } else if (const auto* ack = std::get_if<AppendAck>(&env.message)) {
      observe_term(ack->term);
      if (node.role == Role::leader && ack->term == node.current_term) {
        if (ack->success) {
          node.match_index[env.from] = std::max(node.match_index[env.from], ack->match_index);
          node.next_index[env.from] = node.match_index[env.from] + 1;
        } else if (node.next_index[env.from] > 1) {
          node.next_index[env.from] -= 1;
        }
      }
    } else if (const auto* report = std::get_if<ClientReportMessage>(&env.message)) {
      if (node.role == Role::leader) node.collected_reports.push_back(*report);
    } else if (const auto* fin = std::get_if<FinalizedBroadcast>(&env.message)) {
      node.last_finalized = fin->finalized;
    }
  }

  // Vote decision for the current term, taken once the whole inbox is known.
  std::optional<NodeId> granted_to;
  if (node.voted_for) {
    for (const auto& [from, rv] : requests) {
      if (rv.term == node.current_term && node.voted_for == from) granted_to = from;
    }
  } else if (node.role == Role::candidate || !requests.empty()) {
    const Rank own = rank_of(node.last_log_term(), node.last_log_index(), node.id);
    std::optional<std::pair<Rank, NodeId>> best;
    if (node.role == Role::candidate) best = std::make_pair(own, node.id);
    for (const auto& [from, rv] : requests) {
      if (rv.term != node.current_term) continue;
      const Rank theirs = rank_of(rv.last_log_term, rv.last_log_index, from);
      // Up-to-date rule compares logs only.
      if (std::tie(std::get<0>(theirs), std::get<1>(theirs)) < std::tie(std::get<0>(own), std::get<1>(own))) {
        continue;
      }
      if (!best || theirs > best->first) best = std::make_pair(theirs, from);
    }
    if (best) {
      node.voted_for = best->second;
      if (best->second == node.id) {
        node.votes_from[node.id] = true;
      } else {
        granted_to = best->second;
        node.elapsed = 0;
        if (node.role == Role::candidate) become_follower(node);
      }
    }
  }
  for (const auto& [from, rv] : requests) {
    out.push_back({node.id, from, now, VoteGranted{node.current_term, granted_to == from}});
  }

  if (node.role == Role::candidate) {
    const auto votes = static_cast<std::size_t>(std::count(node.votes_from.begin(), node.votes_from.end(), true));
    if (votes >= node.majority()) become_leader(node);
  }

  if (node.role != Role::leader && node.elapsed >= node.election_timeout) {
    start_election(node, now, out);
  }

  if (node.role == Role::leader) lead(node, now, out);

  return {std::move(node), std::move(out)};
}

LogEntry append_entry(RaftNode& leader, FinalizedRound payload) {
  if (leader.role != Role::leader) throw Error("not leader");
  leader.log.push_back(LogEntry{leader.current_term, std::move(payload)});
  leader.match_index[leader.id] = leader.last_log_index();
  return leader.log.back();
}

LogEntry submit_round(RaftNode& leader, std::uint64_t round, std::span<const ClientReport> reports,
                      const DetectionParams& params, OpCounter* ops) {
  if (leader.role != Role::leader) throw Error("not leader");
  std::vector<ClientReport> sorted(reports.begin(), reports.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ClientReport& a, const ClientReport& b) { return a.node_id < b.node_id; });
  std::vector<Position> ins;
  ins.reserve(sorted.size());
  for (const auto& r : sorted) ins.push_back(r.ins_estimate);
  const RangeMatrix ranges = ranges_from_reports(sorted);
  FinalizedRound payload{round, verify_and_recover(sorted, ranges, ins, params, ops)};
  return append_entry(leader, std::move(payload));
}

}  // namespace swarmraft::raft
