#include "icpa/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string_view>

#include "icpa/error.hpp"

namespace icpa {

SourceGraph::SourceGraph(std::vector<Node> nodes, std::vector<Edge> edges,
                         std::size_t num_categories)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  const std::size_t n = nodes_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (nodes_[i].id != i) throw ValidationError("node ids must be dense and ordered");
    if (nodes_[i].category >= num_categories)
      throw ValidationError("node " + std::to_string(i) + ": category " +
                            std::to_string(nodes_[i].category) + " out of range [0, " +
                            std::to_string(num_categories) + ")");
    nodes_[i].degree = 0.0;
  }
  std::vector<std::size_t> counts(n + 1, 0);
  for (const Edge& e : edges_) {
    if (e.u >= n || e.v >= n)
      throw ValidationError("dangling edge endpoint (" + std::to_string(e.u) + ", " +
                            std::to_string(e.v) + ")");
    if (e.u == e.v) throw ValidationError("self-loop on node " + std::to_string(e.u));
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
      throw ValidationError("edge weight must be finite and non-negative");
    ++counts[e.u + 1];
    ++counts[e.v + 1];
    nodes_[e.u].degree += e.weight;
    nodes_[e.v].degree += e.weight;
  }
  adj_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) adj_offsets_[i + 1] = adj_offsets_[i] + counts[i + 1];
  adj_nodes_.resize(adj_offsets_[n]);
  adj_weights_.resize(adj_offsets_[n]);
  std::vector<std::size_t> cursor(adj_offsets_.begin(), adj_offsets_.end() - 1);
  for (const Edge& e : edges_) {
    adj_nodes_[cursor[e.u]] = e.v;
    adj_weights_[cursor[e.u]++] = e.weight;
    adj_nodes_[cursor[e.v]] = e.u;
    adj_weights_[cursor[e.v]++] = e.weight;
  }
  by_category_.assign(num_categories, {});
  for (const Node& node : nodes_) by_category_[node.category].push_back(node.id);
}

const Node& SourceGraph::node(NodeId id) const {
  if (id >= nodes_.size()) throw ValidationError("unknown node id " + std::to_string(id));
  return nodes_[id];
}

std::span<const NodeId> SourceGraph::neighbors(NodeId id) const {
  node(id);
  return std::span<const NodeId>(adj_nodes_).subspan(adj_offsets_[id],
                                                     adj_offsets_[id + 1] - adj_offsets_[id]);
}

std::span<const double> SourceGraph::neighbor_weights(NodeId id) const {
  node(id);
  return std::span<const double>(adj_weights_)
      .subspan(adj_offsets_[id], adj_offsets_[id + 1] - adj_offsets_[id]);
}

std::span<const NodeId> SourceGraph::category_nodes(Category c) const {
  if (c >= by_category_.size())
    throw ValidationError("category " + std::to_string(c) + " out of range");
  return by_category_[c];
}

std::size_t MultiSourceGraph::num_features() const {
  std::size_t count = 0;
  for (const auto& s : sources)
    for (const auto& node : s.nodes())
      for (FeatureId f : node.features) count = std::max<std::size_t>(count, f + 1);
  return count;
}

std::size_t MultiSourceGraph::total_nodes() const {
  std::size_t total = 0;
  for (const auto& s : sources) total += s.size();
  return total;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : path_(path.string()), in_(path) {
    if (!in_) throw Error("cannot open " + path_);
  }

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!trim(line).empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(path_, line_no_, what);
  }

  std::uint32_t parse_id(std::string_view field, const char* what) const {
    field = trim(field);
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
      fail(std::string("invalid ") + what + " '" + std::string(field) + "'");
    return value;
  }

  double parse_weight(std::string_view field) const {
    field = trim(field);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
      fail("invalid weight '" + std::string(field) + "'");
    if (!(value >= 0.0) || !std::isfinite(value)) fail("weight must be finite and >= 0");
    return value;
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

struct RawNode {
  Node node;
  std::string type;
};

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

MultiSourceGraph load_graph(const std::filesystem::path& nodes_path,
                            const std::filesystem::path& edges_path,
                            std::optional<std::size_t> num_categories) {
  std::map<std::uint32_t, std::map<NodeId, RawNode>> raw_nodes;
  std::set<std::string> type_tags;
  std::uint32_t max_category = 0;
  bool any_node = false;
  {
    LineReader reader(nodes_path);
    std::string line;
    while (reader.next(line)) {
      const auto cols = split(line, '\t');
      if (cols.size() != 4 && cols.size() != 5)
        reader.fail("expected 4 or 5 tab-separated columns, got " + std::to_string(cols.size()));
      const std::uint32_t source = reader.parse_id(cols[0], "source id");
      RawNode raw;
      raw.node.id = reader.parse_id(cols[1], "node id");
      raw.type = std::string(trim(cols[2]));
      if (raw.type.empty()) reader.fail("empty node type");
      raw.node.category = reader.parse_id(cols[3], "category");
      if (num_categories && raw.node.category >= *num_categories)
        reader.fail("category " + std::to_string(raw.node.category) + " out of range");
      if (cols.size() == 5 && !trim(cols[4]).empty())
        for (auto f : split(trim(cols[4]), ','))
          raw.node.features.push_back(reader.parse_id(f, "feature id"));
      max_category = std::max(max_category, raw.node.category);
      any_node = true;
      type_tags.insert(raw.type);
      auto& bucket = raw_nodes[source];
      if (bucket.contains(raw.node.id))
        reader.fail("duplicate node id " + std::to_string(raw.node.id));
      bucket.emplace(raw.node.id, std::move(raw));
    }
  }

  MultiSourceGraph graph;
  graph.num_categories = num_categories.value_or(any_node ? max_category + 1 : 0);
  graph.type_names.assign(type_tags.begin(), type_tags.end());
  const std::size_t m = raw_nodes.empty() ? 0 : raw_nodes.rbegin()->first + 1;
  if (raw_nodes.size() != m) throw ValidationError("source ids must be dense 0..m-1");

  std::vector<std::vector<Edge>> edges(m);
  {
    LineReader reader(edges_path);
    std::string line;
    while (reader.next(line)) {
      const auto cols = split(line, '\t');
      if (cols.size() != 3 && cols.size() != 4)
        reader.fail("expected 3 or 4 tab-separated columns, got " + std::to_string(cols.size()));
      const std::uint32_t source = reader.parse_id(cols[0], "source id");
      Edge e;
      e.u = reader.parse_id(cols[1], "node id");
      e.v = reader.parse_id(cols[2], "node id");
      if (cols.size() == 4 && !trim(cols[3]).empty()) e.weight = reader.parse_weight(cols[3]);
      if (source >= m) reader.fail("edge references unknown source " + std::to_string(source));
      const auto& bucket = raw_nodes[source];
      if (!bucket.contains(e.u) || !bucket.contains(e.v))
        reader.fail("dangling edge endpoint: node " +
                    std::to_string(bucket.contains(e.u) ? e.v : e.u) + " not in source " +
                    std::to_string(source));
      if (e.u == e.v) reader.fail("self-loop on node " + std::to_string(e.u));
      edges[source].push_back(e);
    }
  }

  for (std::size_t s = 0; s < m; ++s) {
    std::vector<Node> nodes;
    nodes.reserve(raw_nodes[s].size());
    for (auto& [id, raw] : raw_nodes[s]) {
      if (id != nodes.size())
        throw ValidationError("source " + std::to_string(s) + ": node ids must be dense, missing " +
                              std::to_string(nodes.size()));
      raw.node.type = static_cast<TypeId>(
          std::lower_bound(graph.type_names.begin(), graph.type_names.end(), raw.type) -
          graph.type_names.begin());
      nodes.push_back(std::move(raw.node));
    }
    graph.sources.emplace_back(std::move(nodes), std::move(edges[s]), graph.num_categories);
  }
  return graph;
}

void write_graph(const MultiSourceGraph& graph, const std::filesystem::path& nodes_path,
                 const std::filesystem::path& edges_path) {
  std::ofstream nodes_out(nodes_path, std::ios::binary);
  std::ofstream edges_out(edges_path, std::ios::binary);
  if (!nodes_out) throw Error("cannot write " + nodes_path.string());
  if (!edges_out) throw Error("cannot write " + edges_path.string());
  for (std::size_t s = 0; s < graph.sources.size(); ++s) {
    const auto& src = graph.sources[s];
    for (const Node& node : src.nodes()) {
      nodes_out << s << '\t' << node.id << '\t' << graph.type_names.at(node.type) << '\t'
                << node.category << '\t';
      for (std::size_t i = 0; i < node.features.size(); ++i)
        nodes_out << (i ? "," : "") << node.features[i];
      nodes_out << '\n';
    }
    for (const Edge& e : src.edges())
      edges_out << s << '\t' << e.u << '\t' << e.v << '\t' << format_double(e.weight) << '\n';
  }
  if (!nodes_out || !edges_out) throw Error("write failed");
}

std::vector<std::vector<NodeId>> category_partition(const MultiSourceGraph& graph, Category c) {
  if (c >= graph.num_categories)
    throw ValidationError("category " + std::to_string(c) + " out of range [0, " +
                          std::to_string(graph.num_categories) + ")");
  std::vector<std::vector<NodeId>> out;
  out.reserve(graph.sources.size());
  for (const auto& s : graph.sources) {
    auto ids = s.category_nodes(c);
    out.emplace_back(ids.begin(), ids.end());
  }
  return out;
}

MultiSourceGraph with_edges(const MultiSourceGraph& graph,
                            const std::vector<std::vector<Edge>>& edges_per_source) {
  if (edges_per_source.size() != graph.sources.size())
    throw ValidationError("with_edges: one edge list per source required");
  MultiSourceGraph out;
  out.num_categories = graph.num_categories;
  out.type_names = graph.type_names;
  for (std::size_t s = 0; s < graph.sources.size(); ++s)
    out.sources.emplace_back(graph.sources[s].nodes(), edges_per_source[s], graph.num_categories);
  return out;
}

}  // namespace icpa
