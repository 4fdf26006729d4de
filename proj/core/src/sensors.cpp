#include "swarmraft/sensors.hpp"

#include <algorithm>
#include <cmath>

#include "swarmraft/error.hpp"

namespace swarmraft {

void RangeMatrix::set_pair(NodeId i, NodeId j, double meters) {
  if (i == j) throw Error("range pair must join two distinct nodes");
  if (i >= n_ || j >= n_) throw Error("range pair out of bounds");
  d_[i * n_ + j] = meters;
  d_[j * n_ + i] = meters;
}

Position sample_gnss(const Position& true_pos, const CovarianceDiag& r_gnss, RandomStream& rng) {
  r_gnss.validate();
  return {rng.gaussian(true_pos.x, r_gnss.variances[0]), rng.gaussian(true_pos.y, r_gnss.variances[1]),
          rng.gaussian(true_pos.z, r_gnss.variances[2])};
}

Position propagate_ins(const Position& prev_estimate, const MotionIncrement& increment,
                       const CovarianceDiag& r_ins, RandomStream& rng) {
  r_ins.validate();
  const Position predicted = prev_estimate + increment.delta;
  return {rng.gaussian(predicted.x, r_ins.variances[0]), rng.gaussian(predicted.y, r_ins.variances[1]),
          rng.gaussian(predicted.z, r_ins.variances[2])};
}

RangeMatrix measure_ranges(std::span<const Position> true_positions, double sigma_d,
                           RandomStream& rng) {
  if (true_positions.size() < 2) throw Error("measure_ranges needs at least two positions");
  if (!(sigma_d >= 0.0)) throw Error("sigma_d must be nonnegative");
  const std::size_t n = true_positions.size();
  RangeMatrix d(n);
  const double variance = sigma_d * sigma_d;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const double exact = euclidean_distance(true_positions[i], true_positions[j]);
      d.set_pair(i, j, std::max(0.0, rng.gaussian(exact, variance)));
    }
  }
  return d;
}

std::vector<Position> sample_formation(std::size_t n, int dimension, double bounding_box,
                                       double min_separation, RandomStream& rng) {
  if (dimension != 2 && dimension != 3) throw Error("dimension must be 2 or 3");
  if (!(bounding_box > 0.0)) throw Error("bounding_box must be positive");
  constexpr int kMaxAttemptsPerNode = 10000;
  std::vector<Position> out;
  out.reserve(n);
  while (out.size() < n) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttemptsPerNode && !placed; ++attempt) {
      Position p{rng.uniform(0.0, bounding_box), rng.uniform(0.0, bounding_box),
                 dimension == 3 ? rng.uniform(0.0, bounding_box) : 0.0};
      placed = std::all_of(out.begin(), out.end(), [&](const Position& q) {
        return euclidean_distance(p, q) >= min_separation;
      });
      if (placed) out.push_back(p);
    }
    if (!placed) throw Error("cannot place formation: min_separation too large for bounding_box");
  }
  return out;
}

}  // namespace swarmraft
