#include <doctest.h>

#include <cmath>
#include <vector>

#include "swarmraft/error.hpp"
#include "swarmraft/geometry.hpp"
#include "swarmraft/random.hpp"
#include "swarmraft/stats.hpp"

using namespace swarmraft;

TEST_CASE("euclidean distance examples") {
  CHECK(euclidean_distance({0, 0, 0}, {0, 0, 0}) == 0.0);
  CHECK(euclidean_distance({0, 0, 0}, {3, 4, 0}) == doctest::Approx(5.0));
  CHECK(euclidean_distance({1, 2, 3}, {4, 6, 3}) == doctest::Approx(5.0));
}

TEST_CASE("distance is symmetric and obeys the triangle inequality") {
  auto rng = RandomStream::derive(Seed{7}, StreamTag::placement);
  for (int i = 0; i < 1000; ++i) {
    const Position a{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
    const Position b{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
    const Position c{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
    CHECK(euclidean_distance(a, b) == euclidean_distance(b, a));
    CHECK(euclidean_distance(a, c) <= euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-12);
  }
}

TEST_CASE("centroid examples") {
  const std::vector<Position> two{{0, 0, 0}, {2, 0, 0}};
  CHECK(centroid(two) == Position{1, 0, 0});
  const std::vector<Position> one{{1, 1, 1}};
  CHECK(centroid(one) == Position{1, 1, 1});
  const std::vector<Position> three{{0, 0, 0}, {3, 0, 0}, {0, 3, 0}};
  const auto c = centroid(three);
  CHECK(c.x == doctest::Approx(1.0));
  CHECK(c.y == doctest::Approx(1.0));
  CHECK(c.z == 0.0);
  CHECK_THROWS_WITH_AS(centroid(std::vector<Position>{}), "empty anchor set", Error);
}

TEST_CASE("mean absolute error examples") {
  const std::vector<Position> a{{1, 2, 3}, {4, 5, 6}};
  CHECK(mean_absolute_error(a, a) == 0.0);
  CHECK(mean_absolute_error(std::vector<Position>{{0, 0, 0}}, std::vector<Position>{{3, 4, 0}}) ==
        doctest::Approx(5.0));
  CHECK(mean_absolute_error(std::vector<Position>{{0, 0, 0}, {0, 0, 0}},
                            std::vector<Position>{{2, 0, 0}, {0, 4, 0}}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(mean_absolute_error(a, std::vector<Position>{{0, 0, 0}}), Error);
  CHECK_THROWS_AS(mean_absolute_error(std::vector<Position>{}, std::vector<Position>{}), Error);
}

TEST_CASE("mean absolute error is translation invariant") {
  auto rng = RandomStream::derive(Seed{3}, StreamTag::placement);
  std::vector<Position> est, truth, est2, truth2;
  const Position shift{12.5, -3.0, 7.25};
  for (int i = 0; i < 20; ++i) {
    est.push_back({rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10)});
    truth.push_back({rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10)});
    est2.push_back(est.back() + shift);
    truth2.push_back(truth.back() + shift);
  }
  CHECK(mean_absolute_error(est, truth) == doctest::Approx(mean_absolute_error(est2, truth2)).epsilon(1e-12));
}

TEST_CASE("gaussian sampling") {
  RandomStream rng(42);
  CHECK(gaussian_sample(rng, 7.0, 0.0) == 7.0);
  CHECK_THROWS_AS(gaussian_sample(rng, 0.0, -1.0), Error);

  constexpr int N = 100000;
  std::vector<double> unit, wide;
  for (int i = 0; i < N; ++i) unit.push_back(gaussian_sample(rng, 0.0, 1.0));
  for (int i = 0; i < N; ++i) wide.push_back(gaussian_sample(rng, 0.0, 4.0));
  CHECK(std::abs(sample_mean(unit)) < 0.02);
  const double sd = sample_stddev(wide);
  CHECK(sd * sd == doctest::Approx(4.0).epsilon(0.025));
}

TEST_CASE("zero variance still consumes a draw") {
  RandomStream a(9), b(9);
  gaussian_sample(a, 1.0, 0.0);
  gaussian_sample(b, 1.0, 1.0);
  CHECK(a.gaussian_draws() == 1);
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams are reproducible and independent of label order") {
  auto a = RandomStream::derive(Seed{5}, StreamTag::gnss, 1, 2);
  auto b = RandomStream::derive(Seed{5}, StreamTag::gnss, 1, 2);
  auto c = RandomStream::derive(Seed{5}, StreamTag::gnss, 2, 1);
  const auto x = a.next_u64();
  CHECK(x == b.next_u64());
  CHECK(x != c.next_u64());
  CHECK(derive_seed(Seed{5}, {1}) != derive_seed(Seed{6}, {1}));
}

TEST_CASE("random unit vectors") {
  RandomStream rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto v3 = random_unit_vector(rng, 3);
    CHECK(v3.norm() == doctest::Approx(1.0));
    const auto v2 = random_unit_vector(rng, 2);
    CHECK(v2.norm() == doctest::Approx(1.0));
    CHECK(v2.z == 0.0);
  }
}

TEST_CASE("covariance validation") {
  CHECK_NOTHROW(CovarianceDiag::isotropic(0.0).validate());
  CHECK_THROWS_AS((CovarianceDiag{{1.0, -1.0, 1.0}}.validate()), Error);
  CHECK_THROWS_AS((CovarianceDiag{{1.0, NAN, 1.0}}.validate()), Error);
}

TEST_CASE("summary statistics") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto s = summarize(v);
  CHECK(s.mean == 3.0);
  CHECK(s.median == 3.0);
  CHECK(s.q1 == 2.0);
  CHECK(s.q3 == 4.0);
  CHECK(s.min == 1.0);
  CHECK(s.max == 5.0);
  CHECK(s.iqr() == 2.0);
  CHECK(quantile(std::vector<double>{0, 10}, 0.25) == doctest::Approx(2.5));
  CHECK(sample_stddev(std::vector<double>{4.0}) == 0.0);
  const auto single = summarize(std::vector<double>{2.5});
  CHECK(single.median == 2.5);
  CHECK(single.min == single.max);
}

TEST_CASE("log-log slope recovers a power law") {
  const std::vector<double> x{5, 9, 13, 17};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v * v);
  CHECK(log_log_slope(x, y) == doctest::Approx(2.0));
}
