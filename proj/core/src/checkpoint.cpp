#include "icpa/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "icpa/error.hpp"

namespace icpa {

namespace {
constexpr const char* kFormat = "icpa-checkpoint";
constexpr int kVersion = 1;
}  // namespace

nlohmann::json checkpoint_to_json(const ConstNamedBlocks& blocks) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [block_name, block] : blocks)
    for (std::size_t id = 0; id < block->layout().size(); ++id) {
      const auto& spec = block->spec(id);
      const auto values = block->tensor(id);
      tensors.push_back({{"name", block_name + "/" + spec.name},
                         {"shape", spec.shape},
                         {"data", std::vector<double>(values.begin(), values.end())}});
    }
  return {{"format", kFormat}, {"version", kVersion}, {"tensors", std::move(tensors)}};
}

void checkpoint_from_json(const nlohmann::json& doc, const NamedBlocks& blocks) {
  if (!doc.is_object() || doc.value("format", "") != kFormat)
    throw ValidationError("not an icpa checkpoint");
  if (doc.value("version", 0) != kVersion)
    throw ValidationError("unsupported checkpoint version");
  std::map<std::string, const nlohmann::json*> by_name;
  for (const auto& t : doc.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;

  std::size_t used = 0;
  for (const auto& [block_name, block] : blocks)
    for (std::size_t id = 0; id < block->layout().size(); ++id) {
      const auto& spec = block->spec(id);
      const std::string name = block_name + "/" + spec.name;
      auto it = by_name.find(name);
      if (it == by_name.end()) throw ValidationError("checkpoint missing tensor " + name);
      const auto shape = it->second->at("shape").get<std::vector<std::size_t>>();
      if (shape != spec.shape) throw ValidationError("checkpoint shape mismatch for " + name);
      const auto data = it->second->at("data").get<std::vector<double>>();
      if (data.size() != spec.size()) throw ValidationError("checkpoint size mismatch for " + name);
      std::copy(data.begin(), data.end(), block->tensor(id).begin());
      ++used;
    }
  if (used != by_name.size()) throw ValidationError("checkpoint has unexpected tensors");
}

void save_checkpoint(const std::filesystem::path& path, const ConstNamedBlocks& blocks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << checkpoint_to_json(blocks).dump() << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, const NamedBlocks& blocks) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  checkpoint_from_json(doc, blocks);
}

}  // namespace icpa
