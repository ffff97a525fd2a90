#include <gtest/gtest.h>

#include <cmath>

#include "icpa/error.hpp"
#include "icpa/eval.hpp"
#include "icpa/synthetic.hpp"

using namespace icpa;

namespace {

RankedList ranked(std::vector<NodeId> candidates, std::vector<double> labels) {
  RankedList r;
  r.candidates = std::move(candidates);
  r.labels = std::move(labels);
  for (std::size_t i = 0; i < r.candidates.size(); ++i)
    r.scores.push_back(1.0 - 0.1 * static_cast<double>(i));
  return r;
}

}  // namespace

TEST(Ndcg, RelevantFirstIsOne) {
  EXPECT_EQ(ndcg_at_k(ranked({7}, {1}), 1), 1.0);
  EXPECT_EQ(ndcg_at_k(ranked({7, 8, 9}, {1, 0, 0}), 3), 1.0);
}

TEST(Ndcg, RelevantSecondOfTwo) {
  EXPECT_NEAR(ndcg_at_k(ranked({7, 8}, {0, 1}), 2), 1.0 / std::log2(3.0), 1e-12);
}

TEST(Ndcg, NoRelevantItemsIsZero) {
  EXPECT_EQ(ndcg_at_k(ranked({7, 8}, {0, 0}), 2), 0.0);
}

TEST(Ndcg, GradedLabels) {
  // DCG = 1 + 3/log2(3), ideal = 3 + 1/log2(3).
  const double expected = (1 + 3 / std::log2(3.0)) / (3 + 1 / std::log2(3.0));
  EXPECT_NEAR(ndcg_at_k(ranked({1, 2}, {1, 3}), 2), expected, 1e-12);
}

TEST(Ndcg, CutoffBelowTheHit) {
  EXPECT_EQ(ndcg_at_k(ranked({7, 8}, {0, 1}), 1), 0.0);
}

TEST(Ndcg, RejectsBadInput) {
  EXPECT_THROW(ndcg_at_k(ranked({1}, {1}), 0), ValidationError);
  auto r = ranked({1, 2}, {1, 0});
  r.scores = {0.1, 0.5};
  EXPECT_THROW(ndcg_at_k(r, 2), ValidationError);
  EXPECT_THROW(ndcg_at_k(ranked({1, 2}, {-1, 0}), 2), ValidationError);
}

TEST(FMeasure, PerfectTopK) {
  EXPECT_EQ(f_measure_at_k(ranked({1, 2, 3}, {0, 0, 0}), 2, {1, 2}), 1.0);
}

TEST(FMeasure, OneHitOutOfFour) {
  EXPECT_NEAR(f_measure_at_k(ranked({1, 9, 3}, {0, 0, 0}), 2, {1, 2, 3, 4}), 1.0 / 3.0, 1e-12);
}

TEST(FMeasure, ZeroHits) {
  EXPECT_EQ(f_measure_at_k(ranked({5, 6}, {0, 0}), 2, {1, 2}), 0.0);
  EXPECT_EQ(f_measure_at_k(ranked({5, 6}, {0, 0}), 2, {}), 0.0);
}

TEST(WeightedMean, UniformAndWeighted) {
  EXPECT_NEAR(weighted_mean({1, 2, 6}), 3.0, 1e-15);
  EXPECT_NEAR(weighted_mean({1, 3}, {3, 1}), 1.5, 1e-15);
}

TEST(ChainScore, SingleHistoryItem) {
  EXPECT_NEAR(chain_score({{4, 2.5}}, [](NodeId) { return 0.8; }), 0.8, 1e-12);
}

TEST(ChainScore, EqualWeightsAverage) {
  auto p = [](NodeId y) { return y == 1 ? 0.2 : 0.6; };
  EXPECT_NEAR(chain_score({{1, 1.0}, {2, 1.0}}, p), 0.4, 1e-12);
}

TEST(ChainScore, OrthogonalCandidateScoresOneHalf) {
  EXPECT_NEAR(chain_score({{1, 0.3}, {2, 0.7}}, [](NodeId) { return sigmoid(0.0); }), 0.5, 1e-12);
}

TEST(ChainScore, WeightsNormalize) {
  auto p = [](NodeId y) { return y == 1 ? 0.0 : 1.0; };
  EXPECT_NEAR(chain_score({{1, 1.0}, {2, 3.0}}, p), 0.75, 1e-12);
}

TEST(ChainScore, ModelFormUsesPredictEdge) {
  const auto syn = generate_synthetic(SyntheticSpec{});
  const auto& g = syn.graph.sources[0];
  Model model(ModelConfig{}, syn.graph.num_features(), syn.graph.num_types(), 3);
  const double direct = 0.25 * predict_edge(model, g, 0, 1, 5) + 0.75 * predict_edge(model, g, 0, 2, 5);
  EXPECT_NEAR(chain_score(model, g, 0, 5, {{1, 1.0}, {2, 3.0}}), direct, 1e-12);
}

namespace {

MultiSourceGraph small_graph() {
  SyntheticSpec spec;
  spec.nodes_per_source = 60;
  spec.categories = 2;
  return generate_synthetic(spec).graph;
}

}  // namespace

TEST(Split, HeldOutAndTrainingEdgesPartitionTheGraph) {
  const auto g = small_graph();
  const auto split = make_split(g, 0.2, 4);
  for (std::size_t s = 0; s < g.num_sources(); ++s) {
    EXPECT_EQ(split.held_out[s].size() + split.train.sources[s].edges().size(),
              g.sources[s].edges().size());
    EXPECT_GT(split.held_out[s].size(), 0u);
    for (const auto& t : split.triples[s]) EXPECT_EQ(t.negatives.size(), 6u);
  }
}

TEST(Split, DeterministicPerSeed) {
  const auto g = small_graph();
  const auto a = make_split(g, 0.2, 4), b = make_split(g, 0.2, 4), c = make_split(g, 0.2, 5);
  auto ids = [](const EvalSplit& s) {
    std::vector<NodeId> out;
    for (const auto& es : s.held_out)
      for (const auto& e : es) {
        out.push_back(e.u);
        out.push_back(e.v);
      }
    return out;
  };
  EXPECT_EQ(ids(a), ids(b));
  EXPECT_NE(ids(a), ids(c));
}

TEST(Split, ZeroFractionHoldsNothingOut) {
  const auto g = small_graph();
  const auto split = make_split(g, 0.0, 1);
  for (const auto& h : split.held_out) EXPECT_TRUE(h.empty());
}

TEST(EmpiricalRisk, DuplicatingTheSplitKeepsTheMean) {
  const auto g = small_graph();
  auto split = make_split(g, 0.2, 6);
  Model model(ModelConfig{}, g.num_features(), g.num_types(), 2);
  const double once = empirical_risk(model, split, 0);
  auto& ts = split.triples[0];
  const auto copy = ts;
  ts.insert(ts.end(), copy.begin(), copy.end());
  EXPECT_NEAR(empirical_risk(model, split, 0), once, 1e-12);
  EXPECT_GT(once, 0.0);
}

TEST(EmpiricalRisk, MatchesEdgeLossOnInferenceTriples) {
  const auto g = small_graph();
  const auto split = make_split(g, 0.2, 7);
  Model model(ModelConfig{}, g.num_features(), g.num_types(), 2);
  const auto plans = inference_triples(model, split.train.sources[1], 1, split.triples[1], 3);
  EXPECT_NEAR(empirical_risk(model, split, 1, 3), edge_loss(model, plans, false).loss, 1e-12);
}
