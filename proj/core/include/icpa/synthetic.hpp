#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "icpa/graph.hpp"

namespace icpa {

/// Planted-cluster multi-source graph. Inside every category each source has
/// `clusters` clusters whose sizes are proportional to clusters, clusters-1,
/// ..., 1, so cluster ids double as mass ranks. Clusters carry roles; roles
/// come in partner pairs (0,1), (2,3), ... with a solo role left over when the
/// count is odd. Nodes link densely within their cluster and more sparsely to
/// the partner cluster. In a clean category cluster c of every source plays
/// role c. In a conflicted category sources 1..m-1 permute roles so that the
/// partner pairs no longer line up by mass rank with source 0: matching
/// clusters by distribution shape then pairs clusters whose edge structure
/// disagrees.
struct SyntheticSpec {
  std::size_t sources = 2;
  std::size_t categories = 4;
  std::size_t nodes_per_source = 200;
  /// Edge probability inside a cluster.
  double edge_density = 0.5;
  /// Fraction of categories that are conflicted, rounded to a whole count.
  double conflict_rate = 0.0;
  std::uint64_t seed = 0;
  std::size_t clusters = 6;
  /// Partner-cluster edge probability relative to edge_density.
  double partner_ratio = 0.5;
  double query_fraction = 0.25;
};

struct CorrespondenceRow {
  Category category = 0;
  std::uint32_t source_a = 0;
  std::uint32_t cluster_a = 0;
  std::uint32_t source_b = 0;
  std::uint32_t cluster_b = 0;

  friend bool operator==(const CorrespondenceRow&, const CorrespondenceRow&) = default;
};

struct SyntheticGraph {
  MultiSourceGraph graph;
  /// Source 0 cluster a <-> source b cluster with the same role.
  std::vector<CorrespondenceRow> correspondence;
  std::vector<bool> conflicted;
  /// cluster[s][node] is the planted cluster of that node within its category.
  std::vector<std::vector<std::uint32_t>> cluster;
};

/// Deterministic given spec.seed. Throws ValidationError on bad spec fields.
SyntheticGraph generate_synthetic(const SyntheticSpec& spec);

void write_correspondence(const std::vector<CorrespondenceRow>& rows,
                          const std::filesystem::path& path);
std::vector<CorrespondenceRow> read_correspondence(const std::filesystem::path& path);

}  // namespace icpa
