#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace swarmraft {

using NodeId = std::size_t;

/// Point in the local Cartesian frame, meters. Planar scenarios keep z = 0.
struct Position {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Position operator+(const Position& a, const Position& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend constexpr Position operator-(const Position& a, const Position& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend constexpr Position operator*(double s, const Position& p) {
    return {s * p.x, s * p.y, s * p.z};
  }
  friend constexpr Position operator*(const Position& p, double s) { return s * p; }
  Position& operator+=(const Position& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  friend constexpr bool operator==(const Position&, const Position&) = default;

  double norm() const;
  bool is_finite() const;
};

constexpr double dot(const Position& a, const Position& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

/// Diagonal covariance, m^2 per axis.
struct CovarianceDiag {
  std::array<double, 3> variances{0.0, 0.0, 0.0};

  static CovarianceDiag isotropic(double variance) {
    return CovarianceDiag{{variance, variance, variance}};
  }
  bool is_zero() const {
    return variances[0] == 0.0 && variances[1] == 0.0 && variances[2] == 0.0;
  }
  /// Throws Error if any entry is negative or non-finite.
  void validate() const;
  friend bool operator==(const CovarianceDiag&, const CovarianceDiag&) = default;
};

/// Root of a simulation's random lineage.
struct Seed {
  std::uint64_t value = 0;
  friend constexpr bool operator==(Seed, Seed) = default;
};

double euclidean_distance(const Position& a, const Position& b);

/// Component-wise mean. Throws Error("empty anchor set") on an empty input.
Position centroid(std::span<const Position> points);

}  // namespace swarmraft
