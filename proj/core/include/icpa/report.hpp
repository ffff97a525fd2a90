#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "icpa/trainer.hpp"

namespace icpa {

nlohmann::json trace_to_json(const PhaseTrace& trace);
PhaseTrace trace_from_json(const nlohmann::json& doc);

/// The run report. Contains no wall-clock data, so identical inputs give
/// byte-identical output.
nlohmann::json report_to_json(const RunResult& result);

/// Pretty-printed dump written to a temporary sibling and renamed into place.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace icpa
