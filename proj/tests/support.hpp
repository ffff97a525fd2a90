#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <iterator>
#include <filesystem>
#include <string>
#include <vector>

#include "icpa/graph.hpp"
#include "icpa/rng.hpp"

namespace icpa::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() /
            ("icpa_" + tag + "_" + std::to_string(rng.next() % 1000000007ULL));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Nodes with features {id + feature_offset}, all of type 0.
inline std::vector<Node> plain_nodes(const std::vector<Category>& categories,
                                     FeatureId feature_offset = 0) {
  std::vector<Node> nodes;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    Node n;
    n.id = static_cast<NodeId>(i);
    n.category = categories[i];
    n.features = {static_cast<FeatureId>(feature_offset + i)};
    nodes.push_back(n);
  }
  return nodes;
}

}  // namespace icpa::test
