#include <benchmark/benchmark.h>

#include "icpa/model.hpp"
#include "icpa/sampler.hpp"
#include "icpa/synthetic.hpp"

namespace {

void BM_EdgeLoss(benchmark::State& state) {
  const auto syn = icpa::generate_synthetic(icpa::SyntheticSpec{});
  const auto& graph = syn.graph;
  icpa::Model model(icpa::ModelConfig{}, graph.num_features(), graph.num_types(), 1);
  icpa::SamplerConfig cfg;
  cfg.batch_size = static_cast<std::size_t>(state.range(0));
  icpa::BatchSampler sampler(graph, cfg);
  icpa::Rng rng(2);
  const auto batch = sampler.next_batch(rng, 0);
  std::vector<icpa::TriplePlan> plans;
  for (const auto& t : batch.triples[0]) {
    icpa::TriplePlan p;
    p.anchor = icpa::sample_plan(graph.sources[0], t.anchor, 5, rng);
    p.positive = icpa::sample_plan(graph.sources[0], t.positive, 5, rng);
    for (auto n : t.negatives) p.negatives.push_back(icpa::sample_plan(graph.sources[0], n, 5, rng));
    plans.push_back(std::move(p));
  }
  const bool with_grad = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(icpa::edge_loss(model, plans, with_grad).loss);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(plans.size()));
}
BENCHMARK(BM_EdgeLoss)->ArgsProduct({{32, 128, 512}, {0, 1}})->Unit(benchmark::kMicrosecond);

void BM_NextBatch(benchmark::State& state) {
  const auto syn = icpa::generate_synthetic(icpa::SyntheticSpec{});
  icpa::BatchSampler sampler(syn.graph, icpa::SamplerConfig{});
  icpa::Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.next_batch(rng).num_triples());
}
BENCHMARK(BM_NextBatch)->Unit(benchmark::kMicrosecond);

}  // namespace
