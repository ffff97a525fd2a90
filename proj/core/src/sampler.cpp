#include "icpa/sampler.hpp"

#include <algorithm>
#include <numeric>

#include "icpa/error.hpp"

namespace icpa {

std::size_t CategoryBatch::num_triples() const {
  std::size_t total = 0;
  for (const auto& t : triples) total += t.size();
  return total;
}

namespace {

std::optional<NodeId> weighted_step(const SourceGraph& graph, NodeId at, Rng& rng) {
  const auto nbrs = graph.neighbors(at);
  const auto weights = graph.neighbor_weights(at);
  double total = 0.0;
  for (double w : weights) total += w;
  if (nbrs.empty() || !(total > 0.0)) return std::nullopt;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    if (weights[i] > 0.0 && u < weights[i]) return nbrs[i];
    u -= weights[i];
  }
  // Rounding left u just past the last segment: take the last positive weight.
  for (std::size_t i = nbrs.size(); i-- > 0;)
    if (weights[i] > 0.0) return nbrs[i];
  return std::nullopt;
}

/// Degree-proportional draws from ids excluding position `skip`.
std::vector<NodeId> draw_excluding(std::span<const NodeId> ids, std::span<const double> prefix,
                                   std::size_t skip, std::size_t k, Rng& rng) {
  if (ids.size() < 2) throw ValidationError("negative sampling: category has only the positive");
  const double start = skip == 0 ? 0.0 : prefix[skip - 1];
  const double width = prefix[skip] - start;
  const double total = prefix.back() - width;
  std::vector<NodeId> out(k);
  for (auto& pick : out) {
    if (!(total > 0.0)) {
      std::size_t i = rng.index(ids.size() - 1);
      if (i >= skip) ++i;
      pick = ids[i];
      continue;
    }
    double u = rng.uniform() * total;
    if (u >= start) u += width;
    auto it = std::upper_bound(prefix.begin(), prefix.end(), u);
    std::size_t i = static_cast<std::size_t>(it - prefix.begin());
    if (i >= ids.size()) i = ids.size() - 1;
    // Guard against landing on the excluded or a zero-degree slot through rounding.
    while (i == skip || prefix[i] == (i == 0 ? 0.0 : prefix[i - 1])) i = i == 0 ? ids.size() - 1 : i - 1;
    pick = ids[i];
  }
  return out;
}

}  // namespace

std::optional<NodeId> walk_positive(const SourceGraph& graph, NodeId anchor, Rng& rng,
                                    std::size_t length) {
  graph.node(anchor);
  if (length == 0) throw ValidationError("walk length must be >= 1");
  NodeId prev = anchor;
  NodeId at = anchor;
  for (std::size_t step = 0; step < length; ++step) {
    auto next = weighted_step(graph, at, rng);
    if (!next) return std::nullopt;
    prev = at;
    at = *next;
  }
  return at == anchor ? prev : at;
}

std::vector<NodeId> sample_negatives(const SourceGraph& graph, NodeId positive, std::size_t k,
                                     Rng& rng) {
  const auto ids = graph.category_nodes(graph.node(positive).category);
  std::vector<double> prefix(ids.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) prefix[i] = acc += graph.node(ids[i]).degree;
  const auto skip = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), positive) -
                                             ids.begin());
  return draw_excluding(ids, prefix, skip, k, rng);
}

BatchSampler::BatchSampler(const MultiSourceGraph& graph, SamplerConfig config)
    : graph_(&graph), config_(config) {
  if (config_.batch_size == 0) throw ValidationError("batch_size must be positive");
  if (config_.walk_length == 0) throw ValidationError("walk_length must be positive");
  if (config_.align_cap == 0) throw ValidationError("align_cap must be positive");
  index_.resize(graph.num_sources());
  for (std::size_t s = 0; s < graph.num_sources(); ++s) {
    const auto& src = graph.sources[s];
    position_offset_.push_back(position_.size());
    position_.resize(position_.size() + src.size());
    index_[s].resize(graph.num_categories);
    for (Category c = 0; c < graph.num_categories; ++c) {
      auto& idx = index_[s][c];
      const auto ids = src.category_nodes(c);
      idx.ids.assign(ids.begin(), ids.end());
      idx.prefix.resize(ids.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        idx.prefix[i] = acc += src.node(ids[i]).degree;
        position_[position_offset_[s] + ids[i]] = i;
      }
    }
  }
}

std::vector<NodeId> BatchSampler::negatives(std::size_t source, NodeId positive, std::size_t k,
                                            Rng& rng) const {
  const auto& src = graph_->sources.at(source);
  const auto& idx = index_[source][src.node(positive).category];
  return draw_excluding(idx.ids, idx.prefix, position_[position_offset_[source] + positive], k,
                        rng);
}

std::optional<Triple> BatchSampler::triple_for(std::size_t source, NodeId anchor,
                                               Rng& rng) const {
  const auto& src = graph_->sources.at(source);
  auto positive = walk_positive(src, anchor, rng, config_.walk_length);
  if (!positive) return std::nullopt;
  if (index_[source][src.node(*positive).category].ids.size() < 2) return std::nullopt;
  Triple t;
  t.anchor = anchor;
  t.positive = *positive;
  t.source = source;
  t.negatives = negatives(source, *positive, config_.negatives, rng);
  return t;
}

CategoryBatch BatchSampler::next_batch(Rng& rng, std::optional<std::size_t> only_source) const {
  const std::size_t m = graph_->num_sources();
  const std::size_t K = graph_->num_categories;
  if (only_source && *only_source >= m) throw ValidationError("source index out of range");
  std::vector<double> mass(K, 0.0);
  double total = 0.0;
  for (Category c = 0; c < K; ++c) {
    for (std::size_t s = 0; s < m; ++s)
      if (!only_source || *only_source == s) mass[c] += static_cast<double>(index_[s][c].ids.size());
    total += mass[c];
  }
  if (!(total > 0.0)) throw ValidationError("sampler: no populated category");

  CategoryBatch batch;
  double u = rng.uniform() * total;
  batch.category = static_cast<Category>(K - 1);
  for (Category c = 0; c < K; ++c) {
    if (u < mass[c]) {
      batch.category = c;
      break;
    }
    u -= mass[c];
  }
  while (mass[batch.category] == 0.0) --batch.category;

  std::vector<std::size_t> populated;
  for (std::size_t s = 0; s < m; ++s)
    if ((!only_source || *only_source == s) && !index_[s][batch.category].ids.empty())
      populated.push_back(s);

  batch.triples.assign(m, {});
  batch.align_nodes.assign(m, {});
  for (std::size_t p = 0; p < populated.size(); ++p) {
    const std::size_t s = populated[p];
    const auto& ids = index_[s][batch.category].ids;
    const std::size_t quota =
        config_.batch_size / populated.size() + (p < config_.batch_size % populated.size() ? 1 : 0);
    auto& out = batch.triples[s];
    const std::size_t max_attempts = 4 * quota + 16;
    for (std::size_t attempt = 0; attempt < max_attempts && out.size() < quota; ++attempt) {
      const NodeId anchor = ids[rng.index(ids.size())];
      if (auto t = triple_for(s, anchor, rng)) out.push_back(std::move(*t));
    }

    auto& align = batch.align_nodes[s];
    align = ids;
    if (align.size() > config_.align_cap) {
      for (std::size_t i = 0; i < config_.align_cap; ++i)
        std::swap(align[i], align[i + rng.index(align.size() - i)]);
      align.resize(config_.align_cap);
      std::sort(align.begin(), align.end());
    }
  }
  return batch;
}

}  // namespace icpa
