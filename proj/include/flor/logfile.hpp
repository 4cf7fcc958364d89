#pragma once

#include "flor/record.hpp"

#include <filesystem>
#include <string>

namespace flor {

// One JSON document per run, schema version flor_schema: 1. The loop
// context is encoded hierarchically on each record.
std::string to_logfile_json(const RunLog& run);
RunLog parse_logfile_json(const std::string& text);

void write_logfile(const RunLog& run, const std::filesystem::path& path);
RunLog read_logfile(const std::filesystem::path& path);

}  // namespace flor
