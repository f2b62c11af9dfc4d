#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "flockplan/domain.hpp"

namespace flockplan::tools {

/// Writes the SVG charts that `doc` (an optimize report, with or without its
/// plan) and the optional corpus support. Returns the files written.
std::vector<std::filesystem::path> write_plots(const nlohmann::json& doc, const std::vector<FlockSample>& corpus,
                                               const std::filesystem::path& dir);

} // namespace flockplan::tools
