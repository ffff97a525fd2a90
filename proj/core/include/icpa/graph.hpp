#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace icpa {

using NodeId = std::uint32_t;
using FeatureId = std::uint32_t;
using TypeId = std::uint32_t;
using Category = std::uint32_t;

struct Node {
  NodeId id = 0;
  Category category = 0;
  TypeId type = 0;
  std::vector<FeatureId> features;
  /// Sum of incident edge weights. Filled in by SourceGraph.
  double degree = 0.0;
};

/// Undirected weighted edge, stored once.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  double weight = 1.0;
};

/// One data source: nodes with dense ids 0..n-1, undirected weighted edges,
/// and a CSR adjacency built at construction. Immutable afterwards.
class SourceGraph {
 public:
  SourceGraph() = default;
  /// Validates endpoints, self-loops, weights and categories (against
  /// num_categories), then caches degrees and adjacency.
  SourceGraph(std::vector<Node> nodes, std::vector<Edge> edges, std::size_t num_categories);

  std::size_t size() const { return nodes_.size(); }
  bool has_node(NodeId id) const { return id < nodes_.size(); }
  const Node& node(NodeId id) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const NodeId> neighbors(NodeId id) const;
  std::span<const double> neighbor_weights(NodeId id) const;
  /// Node ids of category c in ascending order.
  std::span<const NodeId> category_nodes(Category c) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> adj_offsets_;
  std::vector<NodeId> adj_nodes_;
  std::vector<double> adj_weights_;
  std::vector<std::vector<NodeId>> by_category_;
};

struct MultiSourceGraph {
  std::vector<SourceGraph> sources;
  std::size_t num_categories = 0;
  /// Node-type tags in sorted order; Node::type indexes into this.
  std::vector<std::string> type_names;

  std::size_t num_sources() const { return sources.size(); }
  std::size_t num_types() const { return type_names.size(); }
  /// One past the largest feature id used by any node.
  std::size_t num_features() const;
  std::size_t total_nodes() const;
};

/// Reads nodes.tsv / edges.tsv. When num_categories is omitted it is taken as
/// one past the largest category seen.
MultiSourceGraph load_graph(const std::filesystem::path& nodes_path,
                            const std::filesystem::path& edges_path,
                            std::optional<std::size_t> num_categories = std::nullopt);

void write_graph(const MultiSourceGraph& graph, const std::filesystem::path& nodes_path,
                 const std::filesystem::path& edges_path);

/// For each source, the ids of nodes with category c in stable id order.
std::vector<std::vector<NodeId>> category_partition(const MultiSourceGraph& graph, Category c);

/// Rebuilds a graph keeping only the listed edges per source (used for
/// held-out splits). Node data is copied unchanged.
MultiSourceGraph with_edges(const MultiSourceGraph& graph,
                            const std::vector<std::vector<Edge>>& edges_per_source);

}  // namespace icpa
