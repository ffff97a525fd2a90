#include "icpa/eval.hpp"

#include <algorithm>
#include <cmath>

#include "icpa/error.hpp"
#include "icpa/rng.hpp"

namespace icpa {

EvalSplit make_split(const MultiSourceGraph& graph, double fraction, std::uint64_t seed,
                     std::size_t negatives) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ValidationError("split fraction must be in [0, 1)");
  EvalSplit split;
  split.seed = seed;
  const std::size_t m = graph.num_sources();
  std::vector<std::vector<Edge>> keep(m);
  split.held_out.resize(m);
  Rng rng(seed);
  for (std::size_t s = 0; s < m; ++s)
    for (const Edge& e : graph.sources[s].edges())
      (rng.uniform() < fraction ? split.held_out[s] : keep[s]).push_back(e);
  split.train = with_edges(graph, keep);

  split.triples.resize(m);
  for (std::size_t s = 0; s < m; ++s) {
    const auto& src = split.train.sources[s];
    for (const Edge& e : split.held_out[s]) {
      if (!(e.weight > 0.0)) continue;
      if (src.category_nodes(src.node(e.v).category).size() < 2) continue;
      Triple t;
      t.anchor = e.u;
      t.positive = e.v;
      t.source = s;
      t.negatives = sample_negatives(src, e.v, negatives, rng);
      split.triples[s].push_back(std::move(t));
    }
  }
  return split;
}

std::vector<TriplePlan> inference_triples(const Model& model, const SourceGraph& graph,
                                          std::size_t source, const std::vector<Triple>& triples,
                                          std::uint64_t inference_seed) {
  const std::size_t S = model.config().neighbor_samples;
  std::vector<TriplePlan> plans;
  plans.reserve(triples.size());
  for (const auto& t : triples) {
    TriplePlan p;
    p.anchor = inference_plan(graph, source, t.anchor, S, inference_seed);
    p.positive = inference_plan(graph, source, t.positive, S, inference_seed);
    for (NodeId n : t.negatives) p.negatives.push_back(inference_plan(graph, source, n, S, inference_seed));
    plans.push_back(std::move(p));
  }
  return plans;
}

double empirical_risk(const Model& model, const EvalSplit& split, std::size_t source,
                      std::uint64_t inference_seed) {
  if (source >= split.triples.size() || split.triples[source].empty())
    throw ValidationError("empirical_risk: no held-out triples for source " + std::to_string(source));
  const auto plans = inference_triples(model, split.train.sources[source], source,
                                       split.triples[source], inference_seed);
  return edge_loss(model, plans, false).loss;
}

double ndcg_at_k(const RankedList& ranked, std::size_t k) {
  if (k == 0) throw ValidationError("ndcg: k must be >= 1");
  if (ranked.labels.size() != ranked.candidates.size())
    throw ValidationError("ndcg: one label per candidate required");
  for (std::size_t i = 1; i < ranked.scores.size(); ++i)
    if (ranked.scores[i] > ranked.scores[i - 1]) throw ValidationError("ndcg: scores must be non-increasing");
  auto dcg = [k](const std::vector<double>& labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < std::min(k, labels.size()); ++i)
      total += labels[i] / std::log2(static_cast<double>(i) + 2.0);
    return total;
  };
  for (double l : ranked.labels)
    if (l < 0.0) throw ValidationError("ndcg: labels must be non-negative");
  std::vector<double> ideal = ranked.labels;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double best = dcg(ideal);
  return best > 0.0 ? dcg(ranked.labels) / best : 0.0;
}

double f_measure_at_k(const RankedList& ranked, std::size_t k,
                      const std::set<NodeId>& ground_truth) {
  if (k == 0) throw ValidationError("f_measure: k must be >= 1");
  if (ground_truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranked.candidates.size()); ++i)
    if (ground_truth.contains(ranked.candidates[i])) ++hits;
  const double precision = static_cast<double>(hits) / static_cast<double>(k);
  const double recall = static_cast<double>(hits) / static_cast<double>(ground_truth.size());
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

double weighted_mean(const std::vector<double>& values, const std::vector<double>& weights) {
  if (values.empty()) return 0.0;
  if (!weights.empty() && weights.size() != values.size())
    throw ValidationError("weighted_mean: one weight per value required");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    num += w * values[i];
    den += w;
  }
  if (!(den > 0.0)) throw ValidationError("weighted_mean: weights sum to zero");
  return num / den;
}

double chain_score(const std::vector<std::pair<NodeId, double>>& history,
                   const std::function<double(NodeId)>& item_prob) {
  if (history.empty()) throw ValidationError("chain_score: empty history");
  double total = 0.0;
  for (const auto& [item, w] : history) {
    if (!(w > 0.0)) throw ValidationError("chain_score: history weights must be positive");
    total += w;
  }
  double score = 0.0;
  for (const auto& [item, w] : history) score += (w / total) * item_prob(item);
  return score;
}

double chain_score(const Model& model, const SourceGraph& graph, std::size_t source, NodeId y,
                   const std::vector<std::pair<NodeId, double>>& history,
                   std::uint64_t inference_seed) {
  return chain_score(history, [&](NodeId prev) {
    return predict_edge(model, graph, source, prev, y, inference_seed);
  });
}

}  // namespace icpa
