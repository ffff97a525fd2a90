#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "icpa/graph.hpp"
#include "icpa/rng.hpp"

namespace icpa {

struct Triple {
  NodeId anchor = 0;
  NodeId positive = 0;
  std::vector<NodeId> negatives;
  std::size_t source = 0;
};

struct CategoryBatch {
  Category category = 0;
  /// triples[s] holds the triples drawn from source s (empty when s does not
  /// populate the category).
  std::vector<std::vector<Triple>> triples;
  /// align_nodes[s]: nodes of source s in the category, subsampled to the cap.
  std::vector<std::vector<NodeId>> align_nodes;

  std::size_t num_triples() const;
};

struct SamplerConfig {
  std::size_t batch_size = 128;
  std::size_t negatives = 6;
  std::size_t walk_length = 1;
  std::size_t align_cap = 1024;
};

/// Terminal node of a weighted random walk from anchor (node2vec with p=q=1).
/// A walk that ends back on the anchor returns the node visited just before.
/// Returns nullopt when the anchor has no positive-weight edge.
std::optional<NodeId> walk_positive(const SourceGraph& graph, NodeId anchor, Rng& rng,
                                    std::size_t length = 1);

/// k draws with replacement from the positive's category, probability
/// proportional to weighted degree, never returning the positive itself. When
/// every other node has degree 0 the draw is uniform over them. Throws
/// ValidationError if the category holds only the positive.
std::vector<NodeId> sample_negatives(const SourceGraph& graph, NodeId positive, std::size_t k,
                                     Rng& rng);

/// Batch assembly with per-category degree prefix sums cached up front.
class BatchSampler {
 public:
  BatchSampler(const MultiSourceGraph& graph, SamplerConfig config);

  const SamplerConfig& config() const { return config_; }

  /// Picks a category with probability proportional to its node count across
  /// sources (or within only_source), then draws triples split evenly across
  /// the sources that populate it.
  CategoryBatch next_batch(Rng& rng, std::optional<std::size_t> only_source = std::nullopt) const;

  std::vector<NodeId> negatives(std::size_t source, NodeId positive, std::size_t k,
                                Rng& rng) const;

  /// One triple with the given anchor, or nullopt when no valid positive or
  /// negative set exists.
  std::optional<Triple> triple_for(std::size_t source, NodeId anchor, Rng& rng) const;

 private:
  struct CategoryIndex {
    std::vector<NodeId> ids;
    std::vector<double> prefix;  // prefix[i] = sum of degrees of ids[0..i]
  };

  const MultiSourceGraph* graph_;
  SamplerConfig config_;
  std::vector<std::vector<CategoryIndex>> index_;  // [source][category]
  std::vector<std::size_t> position_;              // flattened [source][node] -> slot in ids
  std::vector<std::size_t> position_offset_;
};

}  // namespace icpa
