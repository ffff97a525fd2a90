#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "icpa/params.hpp"

namespace icpa {

/// Named parameter blocks saved together, e.g. {"model", ...}, {"gate", ...}.
/// Tensor names in the file are "<block>/<tensor>".
using NamedBlocks = std::vector<std::pair<std::string, ParamBlock*>>;
using ConstNamedBlocks = std::vector<std::pair<std::string, const ParamBlock*>>;

nlohmann::json checkpoint_to_json(const ConstNamedBlocks& blocks);
/// Fills blocks in place. Every tensor of every block must be present in the
/// document with an identical shape; extra tensors are an error too.
void checkpoint_from_json(const nlohmann::json& doc, const NamedBlocks& blocks);

void save_checkpoint(const std::filesystem::path& path, const ConstNamedBlocks& blocks);
void load_checkpoint(const std::filesystem::path& path, const NamedBlocks& blocks);

}  // namespace icpa
