#include <benchmark/benchmark.h>

#include "swarmraft/harness.hpp"
#include "swarmraft/sensors.hpp"
#include "swarmraft/verification.hpp"

using namespace swarmraft;

static void BM_VerifyAndRecover(benchmark::State& state) {
  SwarmConfig cfg;
  cfg.n = static_cast<std::size_t>(state.range(0));
  cfg.f = (cfg.n - 1) / 2;
  World w = init_world(cfg, Seed{1});
  const auto sensed = sense_round(w);
  DetectionParams params;
  params.tau = params.epsilon = 5.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(verify_and_recover(sensed.reports, sensed.ranges, w.ins_estimates, params));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_VerifyAndRecover)->DenseRange(5, 33, 4)->Complexity();

static void BM_Multilaterate(benchmark::State& state) {
  RandomStream rng(2);
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto pts = sample_formation(m + 1, 3, 200.0, 10.0, rng);
  std::vector<Anchor> anchors;
  for (std::size_t j = 1; j <= m; ++j) anchors.push_back({pts[j], euclidean_distance(pts[j], pts[0]) + rng.gaussian(0, 0.25)});
  const Position init = pts[0] + Position{30, 40, 0};
  for (auto _ : state) benchmark::DoNotOptimize(multilaterate(anchors, init, DetectionParams{}));
}
BENCHMARK(BM_Multilaterate)->Arg(4)->Arg(8)->Arg(16);

BENCHMARK_MAIN();
