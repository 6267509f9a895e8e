#pragma once

#include <filesystem>
#include <string_view>

namespace chanaudit {

/// Directory holding bundled lexicons and tables. The CHANAUDIT_DATA_DIR
/// environment variable overrides the build-time location.
std::filesystem::path data_dir();

/// data_dir() / name; throws std::runtime_error when the file is missing.
std::filesystem::path data_file(std::string_view name);

}  // namespace chanaudit
