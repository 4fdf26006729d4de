#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "swarmraft/geometry.hpp"

namespace swarmraft {

/// Labels that keep independent uses of randomness on separate substreams.
enum class StreamTag : std::uint64_t {
  placement = 1,
  motion = 2,
  attack_selection = 3,
  attack_offset = 4,
  gnss = 5,
  ins = 6,
  ranges = 7,
  raft_timeouts = 8,
  calibration = 9,
  trial = 10,
};

/// SplitMix64 finalizer; used to fold labels into substream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Hash of a seed together with an ordered path of labels.
std::uint64_t derive_seed(Seed root, std::initializer_list<std::uint64_t> path);

/// A single-owner stream of pseudo-random numbers. Streams are derived from a
/// root seed and a label path, so e.g. the GNSS noise of node 3 in round 7 is
/// the same regardless of what else the simulation drew.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t state_seed);

  static RandomStream derive(Seed root, std::initializer_list<std::uint64_t> path) {
    return RandomStream(derive_seed(root, path));
  }
  template <typename... Ids>
  static RandomStream derive(Seed root, StreamTag tag, Ids... ids) {
    return derive(root, {static_cast<std::uint64_t>(tag), static_cast<std::uint64_t>(ids)...});
  }

  /// N(mean, variance). Always consumes one normal draw so zero-variance runs
  /// stay aligned with noisy ones.
  double gaussian(double mean, double variance);
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi].
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  std::uint64_t next_u64() { return engine_(); }

  /// Number of gaussian() calls served so far.
  std::size_t gaussian_draws() const { return gaussian_draws_; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::size_t gaussian_draws_ = 0;
};

/// Throws Error on negative variance; variance 0 returns mean exactly.
double gaussian_sample(RandomStream& rng, double mean, double variance);

/// Isotropic random unit vector in the first `dimension` axes (2 or 3).
Position random_unit_vector(RandomStream& rng, int dimension);

}  // namespace swarmraft
