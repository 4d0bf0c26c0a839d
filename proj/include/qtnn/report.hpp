#pragma once

#include <string>

#include "json.hpp"

namespace qtnn {

/// Serializes with sorted object keys, two-space indentation and every
/// floating-point value printed with 17 significant digits, so reports from
/// identical runs are byte-identical and diff cleanly.
std::string canonical_json(const nlohmann::json& j);

/// Writes canonical_json(report) to `path`. Throws IoError naming the path.
void write_report(const nlohmann::json& report, const std::string& path);
nlohmann::json read_report(const std::string& path);

}  // namespace qtnn
