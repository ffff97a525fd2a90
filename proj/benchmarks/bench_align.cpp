#include <benchmark/benchmark.h>

#include "icpa/align.hpp"

namespace {

// Two sources of n nodes each, 16-dim reps, half-open gates.
void BM_SlicedAlignLoss(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const std::size_t d = 16;
  const icpa::ProjectionSet proj(static_cast<std::size_t>(state.range(1)), d, 1);
  icpa::Rng rng(2);
  std::vector<Eigen::MatrixXd> reps(2, Eigen::MatrixXd(d, n));
  for (auto& r : reps)
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = rng.normal();
  const std::vector<Eigen::MatrixXd> gates(2, Eigen::MatrixXd::Constant(1, n, 0.5));
  for (auto _ : state) {
    auto r = icpa::sliced_align_loss(reps, gates, proj, static_cast<std::size_t>(n));
    benchmark::DoNotOptimize(r.loss);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SlicedAlignLoss)
    ->ArgsProduct({benchmark::CreateRange(1 << 10, 1 << 14, 2), {16}})
    ->Complexity(benchmark::oNLogN)
    ->Unit(benchmark::kMillisecond);

void BM_GateLoss(benchmark::State& state) {
  icpa::Rng rng(3);
  std::vector<double> t(static_cast<std::size_t>(state.range(0)));
  for (auto& x : t) x = 0.01 + 0.98 * rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(icpa::gate_loss(t).loss);
}
BENCHMARK(BM_GateLoss)->Range(1 << 8, 1 << 14);

}  // namespace
