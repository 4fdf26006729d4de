#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "swarmraft/geometry.hpp"
#include "swarmraft/random.hpp"
#include "swarmraft/sensors.hpp"

namespace swarmraft {

enum class AttackMode { gnss_spoof, range_tamper, collusion, mixed };
enum class OffsetModel { fixed_vector, random_direction, time_varying };

std::string_view to_string(AttackMode mode);
std::string_view to_string(OffsetModel model);
AttackMode parse_attack_mode(std::string_view text);
OffsetModel parse_offset_model(std::string_view text);

/// Adversary description. The number of attacked nodes is the swarm's `f`.
struct AttackConfig {
  AttackMode mode = AttackMode::gnss_spoof;
  double offset_magnitude = 50.0;
  OffsetModel offset_model = OffsetModel::random_direction;
  /// Spoof vector for fixed_vector.
  Position fixed_offset{50.0, 0.0, 0.0};
  /// Per-round drift added under time_varying: offset(k) = offset(0) + k * drift.
  Position drift{0.0, 0.0, 0.0};
  double range_bias = 10.0;
  bool colluding = false;
  /// Allows f > (n - 1) / 2 to study breakdown beyond the majority bound.
  bool unsafe = false;

  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

using NodeSet = std::vector<NodeId>;
using NodePair = std::pair<NodeId, NodeId>;

/// Uniformly random f-subset of [0, n), returned sorted. Throws if f >= n.
NodeSet select_attacked(std::size_t n, std::size_t f, RandomStream& rng);

/// Spoof offset for one node at round `round`. random_direction and
/// time_varying draw a fresh direction from `rng`; fixed_vector draws nothing.
Position spoof_offset(const AttackConfig& cfg, int dimension, std::size_t round, RandomStream& rng);

/// Replaces each attacked node's GNSS reading with true_position + offset.
/// Offsets are drawn in ascending id order from `rng`.
std::vector<NodeState> apply_gnss_spoof(std::vector<NodeState> states, const NodeSet& attacked,
                                        const AttackConfig& cfg, RandomStream& rng,
                                        int dimension = 3, std::size_t round = 0);

/// Shifts d[i][j] and d[j][i] by `bias`, clamped at zero.
RangeMatrix apply_range_tamper(RangeMatrix ranges, const std::vector<NodePair>& attacked_pairs,
                               double bias);

/// All attacked nodes report true_position + one shared offset, so their
/// mutual reported distances equal the true ones. Requires cfg.colluding.
std::vector<NodeState> apply_collusion(std::vector<NodeState> states, const NodeSet& attacked,
                                       const AttackConfig& cfg, RandomStream& rng,
                                       int dimension = 3, std::size_t round = 0);

/// Every unordered pair touching an attacked node, i < j, sorted.
std::vector<NodePair> pairs_touching(const NodeSet& attacked, std::size_t n);

}  // namespace swarmraft
