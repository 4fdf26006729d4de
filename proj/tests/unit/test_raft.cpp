#include <doctest.h>

#include <algorithm>
#include <vector>

#include "swarmraft/cluster.hpp"
#include "swarmraft/error.hpp"
#include "swarmraft/harness.hpp"
#include "swarmraft/raft.hpp"

using namespace swarmraft;
using namespace swarmraft::raft;

namespace {

template <typename M>
std::size_t count_of(const std::vector<Envelope>& out) {
  return static_cast<std::size_t>(
      std::count_if(out.begin(), out.end(), [](const Envelope& e) { return std::holds_alternative<M>(e.message); }));
}

Cluster elected(std::size_t n, std::uint64_t seed = 1) {
  Cluster c(n, TimeoutRange{}, Seed{seed});
  while (!c.leader()) c.step();
  return c;
}

std::vector<ClientReport> honest_reports(std::size_t n) {
  SwarmConfig cfg;
  cfg.n = n;
  cfg.f = 0;
  cfg.r_gnss = CovarianceDiag{};
  cfg.r_ins = CovarianceDiag{};
  cfg.sigma_d = 0.0;
  World w = init_world(cfg, Seed{3});
  return sense_round(w).reports;
}

}  // namespace

TEST_CASE("expired follower becomes a candidate") {
  auto node = RaftNode::make(0, 5, TimeoutRange{}, Seed{1});
  node.elapsed = node.election_timeout - 1;
  auto [next, out] = tick(node, {}, 10);
  CHECK(next.role == Role::candidate);
  CHECK(next.current_term == 1);
  CHECK(count_of<RequestVote>(out) == 4);
}

TEST_CASE("candidate with a majority of grants becomes leader and sends heartbeats") {
  auto node = RaftNode::make(0, 5, TimeoutRange{}, Seed{1});
  node.elapsed = node.election_timeout - 1;
  node = tick(node, {}, 1).node;
  std::vector<Envelope> inbox;
  for (NodeId peer : {1, 2, 3}) inbox.push_back({peer, 0, 1, VoteGranted{1, true}});
  auto [leader, out] = tick(node, inbox, 2);
  CHECK(leader.role == Role::leader);
  CHECK(count_of<AppendEntries>(out) == 4);
}

TEST_CASE("leader steps down on a higher term") {
  Cluster c = elected(3);
  const NodeId id = *c.leader();
  RaftNode leader = c.node(id);
  const Term term = leader.current_term;
  const NodeId other = (id + 1) % 3;
  std::vector<Envelope> inbox{{other, id, 0, AppendEntries{term + 1, 0, 0, {}, 0}}};
  auto [next, out] = tick(leader, inbox, c.now());
  CHECK(next.role == Role::follower);
  CHECK(next.current_term == term + 1);
  CHECK(count_of<AppendAck>(out) == 1);
}

TEST_CASE("only a leader can append") {
  auto node = RaftNode::make(1, 3, TimeoutRange{}, Seed{1});
  CHECK_THROWS_WITH_AS(submit_round(node, 1, {}, DetectionParams{}), "not leader", Error);
  CHECK_THROWS_WITH_AS(append_entry(node, {}), "not leader", Error);
}

TEST_CASE("honest round commits with no flags") {
  Cluster c = elected(3);
  const auto reports = honest_reports(3);
  DetectionParams params;
  params.tau = params.epsilon = 1e-6;
  const auto stats = replicate_round(c, 1, reports, params);
  REQUIRE(stats.outcomes.size() == 3);
  for (const auto& o : stats.outcomes) {
    CHECK(!o.faulty);
    CHECK(o.verified_position == reports[o.node_id].reported_position);
  }
  CHECK(c.node(*c.leader()).commit_index == 1);
  for (NodeId id = 0; id < 3; ++id) CHECK(c.node(id).last_finalized.has_value() == (id != *c.leader()));
  // Followers learn the commit index from the next heartbeat.
  c.step();
  c.step();
  for (NodeId id = 0; id < 3; ++id) CHECK(c.node(id).commit_index == 1);
}

TEST_CASE("consensus round costs 2(n-1) envelopes at the leader") {
  for (std::size_t n : {3, 5, 9}) {
    Cluster c = elected(n);
    DetectionParams params;
    params.tau = params.epsilon = 1e-6;
    const auto stats = replicate_round(c, 1, honest_reports(n), params);
    CHECK(stats.reports_collected + stats.finalized_sent == 2 * (n - 1));
    CHECK(stats.ticks_to_commit <= static_cast<std::uint64_t>(TimeoutRange{}.max + 3));
  }
}

TEST_CASE("uncommitted entry of a crashed leader is overwritten") {
  Cluster c = elected(5);
  const NodeId old = *c.leader();
  append_entry(c.node_mut(old), FinalizedRound{99, {}});
  const Tick crash_at = c.now();
  c.schedule_crash({old, crash_at, 30});
  for (int i = 0; i < 15 && (!c.leader() || *c.leader() == old); ++i) c.step();
  REQUIRE(c.leader());
  const NodeId fresh = *c.leader();
  CHECK(fresh != old);
  append_entry(c.node_mut(fresh), FinalizedRound{1, {}});
  while (c.now() < crash_at + 40) c.step();
  CHECK(c.node(old).commit_index >= 1);
  CHECK(c.node(old).log.front().payload.round == 1);
  CHECK(c.violations().empty());
}

TEST_CASE("commit needs a majority of replicas") {
  Cluster c = elected(5);
  const NodeId leader = *c.leader();
  std::vector<NodeId> others;
  for (NodeId id = 0; id < 5; ++id) {
    if (id != leader) others.push_back(id);
  }
  c.schedule_crash({others[0], c.now(), 20});
  c.schedule_crash({others[1], c.now(), 20});
  c.step();
  append_entry(c.node_mut(leader), FinalizedRound{1, {}});
  for (int i = 0; i < 5; ++i) c.step();
  CHECK(c.node(leader).commit_index == 1);

  c.schedule_crash({others[2], c.now(), 10});
  c.step();
  append_entry(c.node_mut(leader), FinalizedRound{2, {}});
  const auto before = c.node(leader).commit_index;
  for (int i = 0; i < 8; ++i) c.step();
  CHECK(c.node(leader).commit_index == before);
  for (int i = 0; i < 10; ++i) c.step();
  CHECK(c.node(leader).commit_index == 2);
}

TEST_CASE("follower crash leaves the leader in place and the follower catches up") {
  Cluster c = elected(5);
  const NodeId leader = *c.leader();
  const NodeId victim = (leader + 1) % 5;
  const auto changes = c.leader_changes().size();
  c.schedule_crash({victim, c.now(), 5});
  for (int i = 0; i < 3; ++i) {
    append_entry(c.node_mut(leader), FinalizedRound{static_cast<std::uint64_t>(i + 1), {}});
    c.step();
  }
  for (int i = 0; i < 12; ++i) c.step();
  CHECK(c.leader_changes().size() == changes);
  CHECK(c.node(victim).log == c.node(leader).log);
  CHECK(c.node(victim).commit_index == 3);
}

TEST_CASE("crashed leader is replaced within the re-election bound") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Cluster c = elected(5, seed);
    const NodeId old = *c.leader();
    const Tick start = c.now() + 3;
    c.schedule_crash({std::nullopt, start, 40});
    while (c.now() < start + 30) c.step();
    const auto samples = reelection_delays(c, c.now());
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].crash.node == old);
    CHECK(samples[0].applicable);
    REQUIRE(samples[0].ticks_to_new_leader.has_value());
    CHECK(*samples[0].ticks_to_new_leader <= static_cast<Tick>(TimeoutRange{}.max + 2));
  }
}

TEST_CASE("no commits without a quorum") {
  Cluster c = elected(5);
  const NodeId leader = *c.leader();
  std::size_t crashed = 0;
  for (NodeId id = 0; id < 5 && crashed < 3; ++id) {
    if (id == leader) continue;
    c.schedule_crash({id, c.now(), 15});
    ++crashed;
  }
  c.step();
  append_entry(c.node_mut(leader), FinalizedRound{1, {}});
  for (int i = 0; i < 12; ++i) c.step();
  CHECK(c.node(leader).commit_index == 0);
  for (int i = 0; i < 10; ++i) c.step();
  CHECK(c.node(*c.leader()).commit_index >= 1);
}

TEST_CASE("randomized traces keep Raft invariants") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomStream rng(seed);
    const std::size_t n = 3 + 2 * rng.uniform_int(0, 2);
    Cluster c(n, TimeoutRange{}, Seed{seed});
    for (int k = 0; k < 4; ++k) {
      CrashSpec spec;
      if (rng.uniform_int(0, 1) == 1) spec.node = rng.uniform_int(0, n - 1);
      spec.start = rng.uniform_int(5, 90);
      spec.duration = rng.uniform_int(1, 12);
      c.schedule_crash(spec);
    }
    for (int t = 0; t < 120; ++t) {
      if (auto l = c.leader(); l && t % 3 == 0) append_entry(c.node_mut(*l), FinalizedRound{static_cast<std::uint64_t>(t), {}});
      c.step();
      for (NodeId id = 0; id < n; ++id) CHECK(c.node(id).commit_index <= c.node(id).log.size());
    }
    CHECK_MESSAGE(c.violations().empty(), "seed " << seed);
    CHECK(election_safety_holds(c.leader_changes()));
  }
}

TEST_CASE("terms never decrease and votes are cast once per term") {
  Cluster c(5, TimeoutRange{}, Seed{77});
  c.schedule_crash({std::nullopt, 20, 10});
  std::vector<Term> terms(5, 0);
  std::vector<std::optional<NodeId>> votes(5);
  for (int t = 0; t < 80; ++t) {
    c.step();
    for (NodeId id = 0; id < 5; ++id) {
      const auto& node = c.node(id);
      CHECK(node.current_term >= terms[id]);
      if (node.current_term == terms[id] && votes[id]) CHECK(node.voted_for == votes[id]);
      terms[id] = node.current_term;
      votes[id] = node.voted_for;
    }
  }
}

TEST_CASE("trace records are emitted as JSON objects") {
  Cluster c(3, TimeoutRange{}, Seed{4}, true);
  for (int i = 0; i < 12; ++i) c.step();
  REQUIRE(!c.trace().empty());
  const auto j = to_json(c.trace().front());
  CHECK(j.contains("tick"));
  CHECK(j.contains("kind"));
  const bool has_role_change = std::any_of(c.trace().begin(), c.trace().end(),
                                           [](const TraceEvent& e) { return e.kind == TraceKind::role_change; });
  CHECK(has_role_change);
}

TEST_CASE("election safety checker flags two leaders in one term") {
  CHECK(election_safety_holds({{1, 1, 0}, {5, 2, 1}}));
  CHECK(!election_safety_holds({{1, 1, 0}, {2, 1, 1}}));
}
