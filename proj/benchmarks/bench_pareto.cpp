#include <benchmark/benchmark.h>

#include "icpa/pareto.hpp"

namespace {

std::vector<icpa::LossVector> points(std::size_t n, std::size_t m) {
  icpa::Rng rng(1);
  std::vector<icpa::LossVector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(icpa::sample_lambda(m, rng));
  return out;
}

void BM_ExtractFront(benchmark::State& state) {
  const auto pts = points(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(icpa::extract_front(pts).size());
}
BENCHMARK(BM_ExtractFront)->Range(64, 4096);

void BM_HufExact(benchmark::State& state) {
  const auto pts = points(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(icpa::huf(pts, {0, 0}).volume);
}
BENCHMARK(BM_HufExact)->Range(64, 4096);

void BM_HufMonteCarlo(benchmark::State& state) {
  const auto pts = points(64, 3);
  const auto samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(icpa::huf(pts, {0, 0, 0}, std::nullopt, 1, samples).volume);
}
BENCHMARK(BM_HufMonteCarlo)->Range(1 << 12, 1 << 18)->Unit(benchmark::kMillisecond);

}  // namespace
