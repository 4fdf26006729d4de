#include <doctest.h>

#include <cmath>
#include <vector>

#include "swarmraft/error.hpp"
#include "swarmraft/harness.hpp"
#include "swarmraft/sensors.hpp"
#include "swarmraft/stats.hpp"

using namespace swarmraft;

TEST_CASE("GNSS with zero noise is exact") {
  RandomStream rng(1);
  const Position p{3, -4, 5};
  CHECK(sample_gnss(p, CovarianceDiag{}, rng) == p);
}

TEST_CASE("GNSS noise matches the configured covariance") {
  RandomStream rng(2);
  const CovarianceDiag r{{4.0, 1.0, 0.25}};
  constexpr int N = 100000;
  std::vector<double> xs, ys, zs;
  for (int i = 0; i < N; ++i) {
    const auto z = sample_gnss({10, 20, 30}, r, rng);
    xs.push_back(z.x - 10);
    ys.push_back(z.y - 20);
    zs.push_back(z.z - 30);
  }
  const double sx = sample_stddev(xs), sy = sample_stddev(ys), sz = sample_stddev(zs);
  CHECK(sx * sx == doctest::Approx(4.0).epsilon(0.05));
  CHECK(sy * sy == doctest::Approx(1.0).epsilon(0.05));
  CHECK(sz * sz == doctest::Approx(0.25).epsilon(0.05));
  CHECK(std::abs(sample_mean(xs)) < 3 * 2.0 / std::sqrt(N));
  CHECK(std::abs(sample_mean(ys)) < 3 * 1.0 / std::sqrt(N));
  CHECK(std::abs(sample_mean(zs)) < 3 * 0.5 / std::sqrt(N));
}

TEST_CASE("INS propagation") {
  RandomStream rng(3);
  CHECK(propagate_ins({0, 0, 0}, {{1, 0, 0}}, CovarianceDiag{}, rng) == Position{1, 0, 0});
  Position p{4, 5, 6};
  for (int k = 0; k < 10; ++k) p = propagate_ins(p, {{0, 0, 0}}, CovarianceDiag{}, rng);
  CHECK(p == Position{4, 5, 6});
}

TEST_CASE("INS drift variance grows linearly with steps") {
  constexpr int runs = 10000;
  constexpr int steps = 10;
  const double sigma2 = 0.25;
  RandomStream rng(4);
  std::vector<double> xs;
  for (int r = 0; r < runs; ++r) {
    Position p{};
    for (int k = 0; k < steps; ++k) p = propagate_ins(p, {{0, 0, 0}}, CovarianceDiag::isotropic(sigma2), rng);
    xs.push_back(p.x);
  }
  const double sd = sample_stddev(xs);
  CHECK(sd * sd == doctest::Approx(steps * sigma2).epsilon(0.10));
}

TEST_CASE("range measurement") {
  const std::vector<Position> pts{{0, 0, 0}, {3, 4, 0}, {0, 0, 10}};
  RandomStream rng(5);
  const auto exact = measure_ranges(pts, 0.0, rng);
  CHECK(exact.at(0, 1) == doctest::Approx(5.0));
  CHECK(exact.at(1, 0) == exact.at(0, 1));
  CHECK(exact.at(0, 2) == doctest::Approx(10.0));
  for (NodeId i = 0; i < 3; ++i) CHECK(exact.at(i, i) == 0.0);

  CHECK_THROWS_AS(measure_ranges(std::vector<Position>{{0, 0, 0}}, 0.5, rng), Error);
}

TEST_CASE("range noise has the configured spread") {
  const std::vector<Position> pts{{0, 0, 0}, {10, 0, 0}};
  RandomStream rng(6);
  std::vector<double> d;
  for (int i = 0; i < 100000; ++i) d.push_back(measure_ranges(pts, 1.0, rng).at(0, 1));
  CHECK(sample_stddev(d) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("one noise draw per unordered pair") {
  std::vector<Position> pts;
  for (int i = 0; i < 5; ++i) pts.push_back({10.0 * i, 0, 0});
  RandomStream rng(7);
  measure_ranges(pts, 0.5, rng);
  CHECK(rng.gaussian_draws() == 10);
}

TEST_CASE("range matrices are symmetric, non-negative, zero on the diagonal") {
  RandomStream rng(8);
  for (int t = 0; t < 50; ++t) {
    auto pts = sample_formation(8, 3, 20.0, 1.0, rng);
    const auto d = measure_ranges(pts, 3.0, rng);
    for (NodeId i = 0; i < 8; ++i) {
      CHECK(d.at(i, i) == 0.0);
      for (NodeId j = 0; j < 8; ++j) {
        CHECK(d.at(i, j) == d.at(j, i));
        CHECK(d.at(i, j) >= 0.0);
      }
    }
  }
  RangeMatrix m(3);
  CHECK_THROWS_AS(m.set_pair(1, 1, 2.0), Error);
  CHECK_THROWS_AS(m.set_pair(0, 3, 2.0), Error);
}

TEST_CASE("formations respect the box and the minimum separation") {
  RandomStream rng(9);
  const auto pts3 = sample_formation(17, 3, 200.0, 10.0, rng);
  const auto pts2 = sample_formation(16, 2, 200.0, 10.0, rng);
  for (const auto* pts : {&pts3, &pts2}) {
    for (std::size_t i = 0; i < pts->size(); ++i) {
      const auto& p = (*pts)[i];
      CHECK(p.x >= 0.0);
      CHECK(p.x <= 200.0);
      for (std::size_t j = i + 1; j < pts->size(); ++j) CHECK(euclidean_distance(p, (*pts)[j]) >= 10.0);
    }
  }
  for (const auto& p : pts2) CHECK(p.z == 0.0);
}

TEST_CASE("zero-noise honest round reproduces the geometry") {
  SwarmConfig cfg;
  cfg.f = 0;
  cfg.r_gnss = CovarianceDiag{};
  cfg.r_ins = CovarianceDiag{};
  cfg.sigma_d = 0.0;
  World w = init_world(cfg, Seed{10});
  const auto sensed = sense_round(w);
  for (NodeId i = 0; i < cfg.n; ++i) {
    CHECK(sensed.states[i].gnss_reading == w.truths[i]);
    CHECK(sensed.states[i].ins_estimate == w.truths[i]);
    for (NodeId j = 0; j < cfg.n; ++j) {
      CHECK(sensed.ranges.at(i, j) == doctest::Approx(euclidean_distance(w.truths[i], w.truths[j])));
    }
  }
}

TEST_CASE("INS error is uncorrelated with GNSS error") {
  SwarmConfig cfg;
  cfg.n = 10;
  cfg.f = 0;
  std::vector<double> g, ins;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    World w = init_world(cfg, Seed{t});
    const auto sensed = sense_round(w);
    for (const auto& s : sensed.states) {
      g.push_back(s.gnss_reading.x - s.true_position.x);
      ins.push_back(s.ins_estimate.x - s.true_position.x);
    }
  }
  const double mg = sample_mean(g), mi = sample_mean(ins);
  double cov = 0, vg = 0, vi = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    cov += (g[i] - mg) * (ins[i] - mi);
    vg += (g[i] - mg) * (g[i] - mg);
    vi += (ins[i] - mi) * (ins[i] - mi);
  }
  CHECK(std::abs(cov / std::sqrt(vg * vi)) < 0.03);
}

TEST_CASE("round zero INS estimate equals truth") {
  SwarmConfig cfg;
  World w = init_world(cfg, Seed{12});
  CHECK(w.ins_estimates == w.truths);
}
