#pragma once

#include <span>
#include <vector>

#include "swarmraft/geometry.hpp"
#include "swarmraft/random.hpp"

namespace swarmraft {

/// Per-drone state for one round. `is_attacked` is ground truth kept for
/// evaluation; the protocol never reads it.
struct NodeState {
  NodeId id = 0;
  Position true_position;
  Position ins_estimate;
  Position gnss_reading;
  bool is_attacked = false;
};

/// Inertial displacement over one step, meters.
struct MotionIncrement {
  Position delta;
};

/// Symmetric matrix of measured inter-node ranges with a zero diagonal.
class RangeMatrix {
 public:
  RangeMatrix() = default;
  explicit RangeMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double at(NodeId i, NodeId j) const { return d_[i * n_ + j]; }
  /// Writes both d[i][j] and d[j][i]. Throws on i == j or out-of-range ids.
  void set_pair(NodeId i, NodeId j, double meters);

  friend bool operator==(const RangeMatrix&, const RangeMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

/// true_pos + v with v ~ N(0, diag(r_gnss)).
Position sample_gnss(const Position& true_pos, const CovarianceDiag& r_gnss, RandomStream& rng);

/// Additive dead reckoning: prev + delta + v with v ~ N(0, diag(r_ins)).
Position propagate_ins(const Position& prev_estimate, const MotionIncrement& increment,
                       const CovarianceDiag& r_ins, RandomStream& rng);

/// One noise draw per unordered pair {i, j}, i < j in row-major order;
/// negative results are clamped to 0. Throws for fewer than two positions.
RangeMatrix measure_ranges(std::span<const Position> true_positions, double sigma_d,
                           RandomStream& rng);

/// Uniform formation in [0, box]^dimension (z = 0 for planar) with a minimum
/// pairwise separation enforced by rejection sampling.
std::vector<Position> sample_formation(std::size_t n, int dimension, double bounding_box,
                                       double min_separation, RandomStream& rng);

}  // namespace swarmraft
