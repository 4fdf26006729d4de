#include "swarmraft/geometry.hpp"

#include <cmath>

#include "swarmraft/error.hpp"

namespace swarmraft {

double Position::norm() const { return std::sqrt(x * x + y * y + z * z); }

bool Position::is_finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

void CovarianceDiag::validate() const {
  for (double v : variances) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error("covariance entries must be finite and nonnegative");
    }
  }
}

double euclidean_distance(const Position& a, const Position& b) { return (a - b).norm(); }

Position centroid(std::span<const Position> points) {
  if (points.empty()) throw Error("empty anchor set");
  Position sum;
  for (const auto& p : points) sum += p;
  return (1.0 / static_cast<double>(points.size())) * sum;
}

}  // namespace swarmraft
