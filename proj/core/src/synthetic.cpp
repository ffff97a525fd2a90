#include "icpa/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "icpa/error.hpp"
#include "icpa/rng.hpp"

namespace icpa {

namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

std::size_t partner_of(std::size_t role, std::size_t clusters) {
  const std::size_t p = role ^ 1U;
  return p < clusters ? p : role;
}

/// Partition of mass ranks into partner groups induced by a role assignment.
std::vector<std::pair<std::size_t, std::size_t>> partner_groups(
    const std::vector<std::uint32_t>& role_of_cluster) {
  const std::size_t c = role_of_cluster.size();
  std::vector<std::size_t> cluster_of_role(c);
  for (std::size_t k = 0; k < c; ++k) cluster_of_role[role_of_cluster[k]] = k;
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t r = 0; r < c; r += 2) {
    std::size_t a = cluster_of_role[r];
    std::size_t b = cluster_of_role[partner_of(r, c)];
    groups.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(groups.begin(), groups.end());
  return groups;
}

std::vector<std::uint32_t> conflicting_roles(std::size_t clusters, Rng& rng) {
  std::vector<std::uint32_t> identity(clusters);
  std::iota(identity.begin(), identity.end(), 0U);
  const auto clean = partner_groups(identity);
  while (true) {
    std::vector<std::uint32_t> roles = identity;
    shuffle(roles, rng);
    if (partner_groups(roles) != clean) return roles;
  }
}

/// Visits each index in [0, total) independently with probability p, using
/// geometric skips so sparse blocks cost O(hits).
template <typename Fn>
void bernoulli_indices(std::uint64_t total, double p, Rng& rng, Fn&& fn) {
  if (p <= 0.0 || total == 0) return;
  if (p >= 1.0) {
    for (std::uint64_t i = 0; i < total; ++i) fn(i);
    return;
  }
  const double log_q = std::log1p(-p);
  std::uint64_t i = 0;
  while (true) {
    const double skip = std::floor(std::log(rng.uniform_open()) / log_q);
    if (skip >= static_cast<double>(total - i)) return;
    i += static_cast<std::uint64_t>(skip);
    fn(i);
    if (++i >= total) return;
  }
}

}  // namespace

SyntheticGraph generate_synthetic(const SyntheticSpec& spec) {
  if (spec.sources < 1) throw ValidationError("synthetic: sources must be >= 1");
  if (spec.categories < 1) throw ValidationError("synthetic: categories must be >= 1");
  if (spec.clusters < 1) throw ValidationError("synthetic: clusters must be >= 1");
  if (spec.nodes_per_source < spec.categories * spec.clusters)
    throw ValidationError("synthetic: nodes_per_source must cover every cluster");
  if (!(spec.edge_density > 0.0 && spec.edge_density <= 1.0))
    throw ValidationError("synthetic: edge_density must be in (0, 1]");
  if (!(spec.conflict_rate >= 0.0 && spec.conflict_rate <= 1.0))
    throw ValidationError("synthetic: conflict_rate must be in [0, 1]");
  if (!(spec.partner_ratio >= 0.0 && spec.partner_ratio <= 1.0))
    throw ValidationError("synthetic: partner_ratio must be in [0, 1]");
  if (!(spec.query_fraction >= 0.0 && spec.query_fraction <= 1.0))
    throw ValidationError("synthetic: query_fraction must be in [0, 1]");

  const std::size_t m = spec.sources;
  const std::size_t K = spec.categories;
  const std::size_t C = spec.clusters;
  const std::size_t n = spec.nodes_per_source;

  Rng master(spec.seed);
  Rng conflict_rng = master.fork(1);

  SyntheticGraph out;
  out.conflicted.assign(K, false);
  const auto n_conflicted = static_cast<std::size_t>(std::llround(spec.conflict_rate * K));
  if (n_conflicted > 0 && C < 3)
    throw ValidationError("synthetic: conflicts need at least 3 clusters per category");
  {
    std::vector<std::size_t> order(K);
    std::iota(order.begin(), order.end(), 0U);
    shuffle(order, conflict_rng);
    for (std::size_t i = 0; i < n_conflicted; ++i) out.conflicted[order[i]] = true;
  }

  // roles[s][k][cluster] = role
  std::vector<std::uint32_t> identity(C);
  std::iota(identity.begin(), identity.end(), 0U);
  std::vector<std::vector<std::vector<std::uint32_t>>> roles(
      m, std::vector<std::vector<std::uint32_t>>(K, identity));
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t s = 1; s < m; ++s)
      if (out.conflicted[k]) roles[s][k] = conflicting_roles(C, conflict_rng);

  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t s = 1; s < m; ++s)
      for (std::size_t a = 0; a < C; ++a) {
        const auto& r = roles[s][k];
        const auto b = static_cast<std::uint32_t>(std::find(r.begin(), r.end(), a) - r.begin());
        out.correspondence.push_back({static_cast<Category>(k), 0, static_cast<std::uint32_t>(a),
                                      static_cast<std::uint32_t>(s), b});
      }

  // Cluster sizes within a category: proportional to C, C-1, ..., 1.
  auto split_sizes = [](std::size_t total, std::size_t parts,
                        const std::vector<double>& mass) {
    std::vector<std::size_t> sizes(parts, 1);
    std::size_t left = total - parts;
    const double sum = std::accumulate(mass.begin(), mass.end(), 0.0);
    std::size_t given = 0;
    for (std::size_t i = 0; i < parts; ++i) {
      const auto extra = static_cast<std::size_t>(std::floor(left * mass[i] / sum));
      sizes[i] += extra;
      given += extra;
    }
    for (std::size_t i = 0; given < left; i = (i + 1) % parts, ++given) ++sizes[i];
    return sizes;
  };
  std::vector<double> cluster_mass(C);
  for (std::size_t c = 0; c < C; ++c) cluster_mass[c] = static_cast<double>(C - c);

  out.graph.num_categories = K;
  out.graph.type_names = {"item", "query"};
  out.cluster.resize(m);
  FeatureId feature_base = 0;
  for (std::size_t s = 0; s < m; ++s) {
    Rng rng = master.fork(100 + s);
    std::vector<double> even(K, 1.0);
    const auto per_category = split_sizes(n, K, even);
    std::vector<std::pair<Category, std::uint32_t>> slots;
    slots.reserve(n);
    for (std::size_t k = 0; k < K; ++k) {
      const auto sizes = split_sizes(per_category[k], C, cluster_mass);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < sizes[c]; ++i)
          slots.emplace_back(static_cast<Category>(k), static_cast<std::uint32_t>(c));
    }
    shuffle(slots, rng);

    std::vector<Node> nodes(n);
    out.cluster[s].resize(n);
    // members[k][role] = node ids, ascending.
    std::vector<std::vector<std::vector<NodeId>>> members(K, std::vector<std::vector<NodeId>>(C));
    for (std::size_t i = 0; i < n; ++i) {
      Node& node = nodes[i];
      node.id = static_cast<NodeId>(i);
      node.category = slots[i].first;
      node.type = rng.uniform() < spec.query_fraction ? 1 : 0;
      node.features = {static_cast<FeatureId>(feature_base + i),
                       static_cast<FeatureId>(feature_base + n + node.category)};
      out.cluster[s][i] = slots[i].second;
      members[node.category][roles[s][node.category][slots[i].second]].push_back(node.id);
    }
    feature_base += static_cast<FeatureId>(n + K);

    std::vector<Edge> edges;
    auto add = [&](NodeId u, NodeId v) {
      edges.push_back({u, v, static_cast<double>(1 + rng.index(3))});
    };
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t r = 0; r < C; ++r) {
        const auto& in = members[k][r];
        const std::uint64_t len = in.size();
        bernoulli_indices(len * (len - 1) / 2, spec.edge_density, rng, [&](std::uint64_t idx) {
          // Unrank idx into the pair (i, j), i < j, row-major over the upper triangle.
          std::uint64_t i = 0;
          std::uint64_t row = len - 1;
          while (idx >= row) {
            idx -= row;
            ++i;
            --row;
          }
          add(in[i], in[i + 1 + idx]);
        });
        const std::size_t p = partner_of(r, C);
        if (p > r) {
          const auto& other = members[k][p];
          bernoulli_indices(len * other.size(), spec.edge_density * spec.partner_ratio, rng,
                            [&](std::uint64_t idx) {
                              add(in[idx / other.size()], other[idx % other.size()]);
                            });
        }
      }
    out.graph.sources.emplace_back(std::move(nodes), std::move(edges), K);
  }
  return out;
}

void write_correspondence(const std::vector<CorrespondenceRow>& rows,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : rows)
    out << r.category << '\t' << r.source_a << '\t' << r.cluster_a << '\t' << r.source_b << '\t'
        << r.cluster_b << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<CorrespondenceRow> read_correspondence(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<CorrespondenceRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    CorrespondenceRow r;
    if (!(fields >> r.category >> r.source_a >> r.cluster_a >> r.source_b >> r.cluster_b))
      throw ParseError(path.string(), line_no, "expected 5 integer columns");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace icpa
