#include "swarmraft/attacks.hpp"

#include <algorithm>
#include <numeric>

#include "swarmraft/error.hpp"

namespace swarmraft {

std::string_view to_string(AttackMode mode) {
  switch (mode) {
    case AttackMode::gnss_spoof: return "gnss_spoof";
    case AttackMode::range_tamper: return "range_tamper";
    case AttackMode::collusion: return "collusion";
    case AttackMode::mixed: return "mixed";
  }
  return "gnss_spoof";
}

std::string_view to_string(OffsetModel model) {
  switch (model) {
    case OffsetModel::fixed_vector: return "fixed_vector";
    case OffsetModel::random_direction: return "random_direction";
    case OffsetModel::time_varying: return "time_varying";
  }
  return "random_direction";
}

AttackMode parse_attack_mode(std::string_view text) {
  for (auto m : {AttackMode::gnss_spoof, AttackMode::range_tamper, AttackMode::collusion, AttackMode::mixed}) {
    if (to_string(m) == text) return m;
  }
  throw Error("unknown attack mode '" + std::string(text) + "'");
}

OffsetModel parse_offset_model(std::string_view text) {
  for (auto m : {OffsetModel::fixed_vector, OffsetModel::random_direction, OffsetModel::time_varying}) {
    if (to_string(m) == text) return m;
  }
  throw Error("unknown offset model '" + std::string(text) + "'");
}

NodeSet select_attacked(std::size_t n, std::size_t f, RandomStream& rng) {
  if (f >= n) throw Error("attacked count must be smaller than swarm size");
  NodeSet ids(n);
  std::iota(ids.begin(), ids.end(), NodeId{0});
  // Partial Fisher-Yates: the first f slots form a uniform f-subset.
  for (std::size_t i = 0; i < f; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, n - 1));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(f);
  std::sort(ids.begin(), ids.end());
  return ids;
}

Position spoof_offset(const AttackConfig& cfg, int dimension, std::size_t round, RandomStream& rng) {
  switch (cfg.offset_model) {
    case OffsetModel::fixed_vector:
      return cfg.fixed_offset;
    case OffsetModel::random_direction:
      return cfg.offset_magnitude * random_unit_vector(rng, dimension);
    case OffsetModel::time_varying:
      return cfg.offset_magnitude * random_unit_vector(rng, dimension) +
             static_cast<double>(round) * cfg.drift;
  }
  return {};
}

namespace {

void check_members(const std::vector<NodeState>& states, const NodeSet& attacked) {
  for (NodeId id : attacked) {
    if (id >= states.size()) throw Error("attacked node id out of range");
  }
}

}  // namespace

std::vector<NodeState> apply_gnss_spoof(std::vector<NodeState> states, const NodeSet& attacked,
                                        const AttackConfig& cfg, RandomStream& rng, int dimension,
                                        std::size_t round) {
  check_members(states, attacked);
  for (NodeId id : attacked) {
    auto& s = states[id];
    s.gnss_reading = s.true_position + spoof_offset(cfg, dimension, round, rng);
    s.is_attacked = true;
  }
  return states;
}

RangeMatrix apply_range_tamper(RangeMatrix ranges, const std::vector<NodePair>& attacked_pairs,
                               double bias) {
  for (const auto& [i, j] : attacked_pairs) {
    if (i == j) throw Error("range tamper pair must join two distinct nodes");
    ranges.set_pair(i, j, std::max(0.0, ranges.at(i, j) + bias));
  }
  return ranges;
}

std::vector<NodeState> apply_collusion(std::vector<NodeState> states, const NodeSet& attacked,
                                       const AttackConfig& cfg, RandomStream& rng, int dimension,
                                       std::size_t round) {
  if (!cfg.colluding) throw Error("apply_collusion requires a colluding attack configuration");
  check_members(states, attacked);
  if (attacked.empty()) return states;
  const Position shared = spoof_offset(cfg, dimension, round, rng);
  for (NodeId id : attacked) {
    auto& s = states[id];
    s.gnss_reading = s.true_position + shared;
    s.is_attacked = true;
  }
  return states;
}

std::vector<NodePair> pairs_touching(const NodeSet& attacked, std::size_t n) {
  std::vector<NodePair> pairs;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const bool hit = std::binary_search(attacked.begin(), attacked.end(), i) ||
                       std::binary_search(attacked.begin(), attacked.end(), j);
      if (hit) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

}  // namespace swarmraft
