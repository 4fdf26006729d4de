#include "swarmraft/random.hpp"

#include <cmath>

#include "swarmraft/error.hpp"

namespace swarmraft {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(Seed root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(root.value);
  for (std::uint64_t label : path) h = mix64(h ^ mix64(label + 0x632be59bd9b4e019ULL));
  return h;
}

RandomStream::RandomStream(std::uint64_t state_seed) : engine_(state_seed) {}

double RandomStream::gaussian(double mean, double variance) {
  if (!(variance >= 0.0)) throw Error("negative variance");
  const double z = normal_(engine_);
  ++gaussian_draws_;
  if (variance == 0.0) return mean;
  return mean + std::sqrt(variance) * z;
}

double RandomStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

std::uint64_t RandomStream::uniform_int(std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
}

double gaussian_sample(RandomStream& rng, double mean, double variance) {
  return rng.gaussian(mean, variance);
}

Position random_unit_vector(RandomStream& rng, int dimension) {
  for (;;) {
    Position v{rng.gaussian(0.0, 1.0), rng.gaussian(0.0, 1.0),
               dimension == 3 ? rng.gaussian(0.0, 1.0) : 0.0};
    const double len = v.norm();
    if (len > 1e-12) return (1.0 / len) * v;
  }
}

}  // namespace swarmraft
