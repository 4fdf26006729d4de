#include "swarmraft/cluster.hpp"

#include <algorithm>

#include "swarmraft/error.hpp"

namespace swarmraft::raft {

std::string_view to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::send: return "send";
    case TraceKind::drop: return "drop";
    case TraceKind::role_change: return "role_change";
    case TraceKind::crash: return "crash";
    case TraceKind::resume: return "resume";
    case TraceKind::commit: return "commit";
  }
  return "send";
}

nlohmann::json to_json(const TraceEvent& e) {
  nlohmann::ordered_json j;
  j["tick"] = e.tick;
  j["kind"] = to_string(e.kind);
  j["node"] = e.node;
  switch (e.kind) {
    case TraceKind::send:
    case TraceKind::drop:
      j["to"] = e.peer;
      j["message"] = e.message;
      j["term"] = e.term;
      break;
    case TraceKind::role_change:
      j["role"] = to_string(e.role);
      j["term"] = e.term;
      break;
    case TraceKind::commit:
      j["index"] = e.index;
      j["term"] = e.term;
      break;
    case TraceKind::crash:
    case TraceKind::resume:
      break;
  }
  return j;
}

namespace {

Term message_term(const Message& m) {
  return std::visit(
      [](const auto& msg) -> Term {
        if constexpr (requires { msg.term; }) {
          return msg.term;
        } else {
          return 0;
        }
      },
      m);
}

}  // namespace

Cluster::Cluster(std::size_t n, TimeoutRange timeouts, Seed seed, bool record_trace)
    : timeouts_(timeouts), pending_(n), down_until_(n, 0), record_trace_(record_trace) {
  if (n < 1) throw Error("cluster needs at least one node");
  nodes_.reserve(n);
  for (NodeId id = 0; id < n; ++id) nodes_.push_back(RaftNode::make(id, n, timeouts, seed));
}

void Cluster::schedule_crash(const CrashSpec& spec) {
  if (spec.duration < 1) throw Error("crash duration must be at least one tick");
  if (spec.node && *spec.node >= nodes_.size()) throw Error("crash target out of range");
  scheduled_.push_back(spec);
}

bool Cluster::alive(NodeId id) const { return down_until_.at(id) <= now_; }

std::size_t Cluster::alive_count() const {
  std::size_t c = 0;
  for (NodeId id = 0; id < nodes_.size(); ++id) c += alive(id) ? 1 : 0;
  return c;
}

std::optional<NodeId> Cluster::leader() const {
  std::optional<NodeId> best;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (!alive(id) || nodes_[id].role != Role::leader) continue;
    if (!best || nodes_[id].current_term > nodes_[*best].current_term) best = id;
  }
  return best;
}

void Cluster::send(NodeId from, NodeId to, Message message) {
  if (to >= nodes_.size() || from >= nodes_.size()) throw Error("envelope endpoint out of range");
  // Stamped as if sent during the previous tick, so it lands in the next step().
  Envelope env{from, to, now_ - 1, std::move(message)};
  ++counters_.total_sent;
  ++counters_.sent_by_type[std::string(message_name(env.message))];
  if (record_trace_) {
    record({env.round, TraceKind::send, from, to, std::string(message_name(env.message)),
            message_term(env.message), Role::follower, 0});
  }
  pending_[to].push_back(std::move(env));
}

void Cluster::record(TraceEvent e) {
  if (record_trace_) trace_.push_back(std::move(e));
}

void Cluster::step() {
  const Tick t = now_;

  for (const auto& spec : scheduled_) {
    if (spec.start != t) continue;
    std::optional<NodeId> target = spec.node;
    if (!target) target = leader();
    if (!target) continue;
    const bool was_leader = nodes_[*target].role == Role::leader && alive(*target);
    down_until_[*target] = std::max(down_until_[*target], t + spec.duration);
    resolved_.push_back({*target, t, t + spec.duration, was_leader});
    record({t, TraceKind::crash, *target, 0, {}, nodes_[*target].current_term, nodes_[*target].role, 0});
  }

  std::vector<std::vector<Envelope>> next(nodes_.size());
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    auto inbox = std::move(pending_[id]);
    pending_[id].clear();
    if (!alive(id)) {
      counters_.dropped += inbox.size();
      for (const auto& env : inbox) {
        record({t, TraceKind::drop, env.from, id, std::string(message_name(env.message)),
                message_term(env.message), Role::follower, 0});
      }
      continue;
    }
    RaftNode& node = nodes_[id];
    if (down_until_[id] == t && t > 0 && std::any_of(resolved_.begin(), resolved_.end(), [&](const CrashInterval& c) {
          return c.node == id && c.end == t;
        })) {
      // Back from a crash: persisted term, vote and log survive; volatile state does not.
      node.role = Role::follower;
      node.elapsed = 0;
      node.next_index.clear();
      node.match_index.clear();
      node.collected_reports.clear();
      node.votes_from.assign(node.cluster_size, false);
      record({t, TraceKind::resume, id, 0, {}, node.current_term, node.role, 0});
    }

    const Role before_role = node.role;
    const Term before_term = node.current_term;
    const LogIndex before_commit = node.commit_index;

    auto result = tick(std::move(node), inbox, t);
    nodes_[id] = std::move(result.node);
    const RaftNode& after = nodes_[id];

    if (after.role != before_role || after.current_term != before_term) {
      record({t, TraceKind::role_change, id, 0, {}, after.current_term, after.role, 0});
    }
    if (after.role == Role::leader && (before_role != Role::leader || before_term != after.current_term)) {
      leader_changes_.push_back({t, after.current_term, id});
      auto [it, inserted] = leader_of_term_.emplace(after.current_term, id);
      if (!inserted && it->second != id) {
        violations_.push_back("election safety: two leaders in term " + std::to_string(after.current_term));
      }
      // Leader completeness: everything committed so far must be in the new leader's log.
      for (LogIndex i = 1; i <= committed_terms_.size(); ++i) {
        if (i > after.log.size() || after.log[i - 1].term != committed_terms_[i - 1]) {
          violations_.push_back("leader completeness: leader " + std::to_string(id) + " of term " +
                                std::to_string(after.current_term) + " lacks committed index " +
                                std::to_string(i));
          break;
        }
      }
    }
    if (after.commit_index > before_commit) {
      record({t, TraceKind::commit, id, 0, {}, after.term_at(after.commit_index), after.role, after.commit_index});
    }

    for (auto& env : result.outbox) {
      ++counters_.total_sent;
      ++counters_.sent_by_type[std::string(message_name(env.message))];
      record({t, TraceKind::send, env.from, env.to, std::string(message_name(env.message)),
              message_term(env.message), Role::follower, 0});
      next[env.to].push_back(std::move(env));
    }
  }

  for (NodeId id = 0; id < nodes_.size(); ++id) {
    for (auto& env : next[id]) pending_[id].push_back(std::move(env));
  }
  check_invariants();
  ++now_;
}

void Cluster::check_invariants() {
  // Track the committed prefix; a disagreement there breaks state machine safety.
  for (const auto& node : nodes_) {
    for (LogIndex i = 1; i <= node.commit_index; ++i) {
      const Term term = node.log[i - 1].term;
      if (i <= committed_terms_.size()) {
        if (committed_terms_[i - 1] != term) {
          violations_.push_back("committed entry " + std::to_string(i) + " differs across nodes");
        }
      } else {
        committed_terms_.push_back(term);
      }
    }
  }
  // Log matching: same (index, term) implies identical prefixes.
  for (std::size_t a = 0; a < nodes_.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes_.size(); ++b) {
      const auto& la = nodes_[a].log;
      const auto& lb = nodes_[b].log;
      const std::size_t common = std::min(la.size(), lb.size());
      for (std::size_t i = common; i > 0; --i) {
        if (la[i - 1].term != lb[i - 1].term) continue;
        if (!std::equal(la.begin(), la.begin() + static_cast<std::ptrdiff_t>(i), lb.begin())) {
          violations_.push_back("log matching violated between nodes " + std::to_string(a) + " and " +
                                std::to_string(b));
        }
        break;
      }
    }
  }
}

bool election_safety_holds(const std::vector<LeaderChange>& changes) {
  std::map<Term, NodeId> seen;
  for (const auto& c : changes) {
    auto [it, inserted] = seen.emplace(c.term, c.leader);
    if (!inserted && it->second != c.leader) return false;
  }
  return true;
}

std::vector<ReelectionSample> reelection_delays(const Cluster& cluster, Tick horizon) {
  std::vector<ReelectionSample> out;
  const std::size_t majority = cluster.size() / 2 + 1;
  const Tick window = static_cast<Tick>(cluster.timeouts().max) + 2;
  for (const auto& crash : cluster.crashes()) {
    if (!crash.was_leader) continue;
    ReelectionSample sample{crash, std::nullopt, true};
    // Applicable only if a live majority exists for the whole re-election window.
    for (Tick t = crash.start; t <= crash.start + window && t < horizon; ++t) {
      std::size_t down = 0;
      for (NodeId id = 0; id < cluster.size(); ++id) {
        const bool is_down = std::any_of(cluster.crashes().begin(), cluster.crashes().end(),
                                         [&](const CrashInterval& c) { return c.node == id && c.start <= t && t < c.end; });
        down += is_down ? 1 : 0;
      }
      if (cluster.size() - down < majority) sample.applicable = false;
    }
    if (crash.start + window >= horizon) sample.applicable = false;
    // A further crash during the election can take out the candidate.
    for (const auto& other : cluster.crashes()) {
      if (other.start > crash.start && other.start <= crash.start + window) sample.applicable = false;
    }
    sample.resumed_early = crash.end <= crash.start + window;
    if (sample.resumed_early) sample.applicable = false;
    for (const auto& change : cluster.leader_changes()) {
      if (change.tick >= crash.start && change.tick < horizon) {
        sample.ticks_to_new_leader = change.tick - crash.start;
        break;
      }
    }
    out.push_back(sample);
  }
  return out;
}

}  // namespace swarmraft::raft
