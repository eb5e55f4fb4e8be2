#include <benchmark/benchmark.h>

#include "sguq/gpc.hpp"
#include "sguq/rng.hpp"

namespace {

struct TrainingSet {
  Eigen::MatrixXd x;
  std::vector<int> labels;
};

TrainingSet two_blobs(int m, int dim) {
  sguq::Rng rng(7);
  TrainingSet set;
  set.x.resize(m, dim);
  for (int i = 0; i < m; ++i) {
    const int label = i % 2;
    for (int j = 0; j < dim; ++j)
      set.x(i, j) = (label ? 1.0 : -1.0) + 0.4 * rng.gaussian();
    set.labels.push_back(label);
  }
  return set;
}

void BM_FitFixedKernel(benchmark::State& state) {
  const auto set = two_blobs(static_cast<int>(state.range(0)), 20);
  const std::vector<sguq::KernelSpec> grid = {
      {sguq::KernelFamily::squared_exponential, 1.0, 3.0, 1e-8}};
  for (auto _ : state) benchmark::DoNotOptimize(sguq::fit(set.x, set.labels, grid));
}
BENCHMARK(BM_FitFixedKernel)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const auto set = two_blobs(200, 20);
  const auto model = sguq::fit(set.x, set.labels);
  sguq::Rng rng(9);
  Eigen::VectorXd probe(20);
  for (int j = 0; j < 20; ++j) probe[j] = rng.gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(sguq::predict(model, probe));
}
BENCHMARK(BM_Predict);

void BM_SigmoidMoments(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(sguq::sigmoid_gauss_moments(0.7, 2.3, 32));
}
BENCHMARK(BM_SigmoidMoments);

}  // namespace
