#include <benchmark/benchmark.h>

#include "sguq/rng.hpp"
#include "sguq/spectral.hpp"

namespace {

Eigen::MatrixXd unit_rows(int n, int d, std::uint64_t seed) {
  sguq::Rng rng(seed);
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = rng.gaussian();
    m.row(i) /= m.row(i).norm();
  }
  return m;
}

void BM_Gram(benchmark::State& state) {
  const auto phi = unit_rows(static_cast<int>(state.range(0)), 384, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sguq::gram(phi));
}
BENCHMARK(BM_Gram)->Arg(20)->Arg(32);

void BM_Eigenspectrum(benchmark::State& state) {
  const auto g = sguq::gram(unit_rows(static_cast<int>(state.range(0)), 64, 2));
  for (auto _ : state) benchmark::DoNotOptimize(sguq::eigenspectrum(g));
}
BENCHMARK(BM_Eigenspectrum)->Arg(8)->Arg(20)->Arg(32);

void BM_CosEigenscore(benchmark::State& state) {
  const auto g = sguq::gram(unit_rows(20, 64, 3));
  for (auto _ : state) benchmark::DoNotOptimize(sguq::cos_eigenscore(g));
}
BENCHMARK(BM_CosEigenscore);

}  // namespace
