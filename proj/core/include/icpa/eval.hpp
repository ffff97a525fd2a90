#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <utility>
#include <vector>

#include "icpa/graph.hpp"
#include "icpa/model.hpp"
#include "icpa/sampler.hpp"

namespace icpa {

/// Held-out positive edges per source with their evaluation triples, and the
/// graph that remains for training.
struct EvalSplit {
  std::uint64_t seed = 0;
  MultiSourceGraph train;
  std::vector<std::vector<Edge>> held_out;
  /// triples[s]: anchor/positive from a held-out edge, negatives drawn from the
  /// positive's category proportional to training degree.
  std::vector<std::vector<Triple>> triples;
};

/// Holds out each edge independently with probability `fraction`.
EvalSplit make_split(const MultiSourceGraph& graph, double fraction, std::uint64_t seed,
                     std::size_t negatives = 6);

/// Triple plans built with deterministic inference sampling on `graph`.
std::vector<TriplePlan> inference_triples(const Model& model, const SourceGraph& graph,
                                          std::size_t source, const std::vector<Triple>& triples,
                                          std::uint64_t inference_seed);

/// Mean edge loss over the split's held-out triples of one source.
double empirical_risk(const Model& model, const EvalSplit& split, std::size_t source,
                      std::uint64_t inference_seed = 0);

struct RankedList {
  NodeId query = 0;
  std::vector<NodeId> candidates;
  std::vector<double> scores;  // non-increasing
  std::vector<double> labels;  // graded relevance ≥ 0, aligned with candidates
};

/// DCG@k with linear gain and 1/log2(i+1) discount, over the ideal DCG@k of
/// the list's own labels. 0 when no label is positive.
double ndcg_at_k(const RankedList& ranked, std::size_t k);

/// Harmonic mean of precision@k and recall@k against ground_truth.
double f_measure_at_k(const RankedList& ranked, std::size_t k,
                      const std::set<NodeId>& ground_truth);

/// Σ_i w_i v_i / Σ_i w_i; uniform weights when `weights` is empty.
double weighted_mean(const std::vector<double>& values, const std::vector<double>& weights = {});

/// Σ_{y'} p(y', x) / Σ p(·, x) · p(y | y'). history holds (y', p(y', x))
/// pairs with positive weights; item_prob(y') returns p(y | y').
double chain_score(const std::vector<std::pair<NodeId, double>>& history,
                   const std::function<double(NodeId)>& item_prob);

/// chain_score with p(y | y') = predict_edge(y', y).
double chain_score(const Model& model, const SourceGraph& graph, std::size_t source, NodeId y,
                   const std::vector<std::pair<NodeId, double>>& history,
                   std::uint64_t inference_seed = 0);

}  // namespace icpa
