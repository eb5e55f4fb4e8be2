#include <benchmark/benchmark.h>

#include "sguq/metrics.hpp"
#include "sguq/rng.hpp"

namespace {

std::vector<sguq::ScoredRecord> random_scored(int n) {
  sguq::Rng rng(11);
  std::vector<sguq::ScoredRecord> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.push_back({"r" + std::to_string(i), rng.uniform(),
                   static_cast<int>(rng.index(2)), std::nullopt});
  out[0].label = 1;
  out[1].label = 0;
  return out;
}

void BM_Auroc(benchmark::State& state) {
  const auto scored = random_scored(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sguq::auroc(scored));
}
BENCHMARK(BM_Auroc)->Arg(500)->Arg(5000);

void BM_Auarc(benchmark::State& state) {
  const auto scored = random_scored(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sguq::auarc(scored));
}
BENCHMARK(BM_Auarc)->Arg(500)->Arg(5000);

void BM_Ece(benchmark::State& state) {
  const auto scored = random_scored(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sguq::ece(scored));
}
BENCHMARK(BM_Ece)->Arg(5000);

}  // namespace
