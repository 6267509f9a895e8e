#include "chanaudit/data.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace chanaudit {

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("CHANAUDIT_DATA_DIR"); env && *env) return env;
  return CHANAUDIT_DATA_DIR;
}

std::filesystem::path data_file(std::string_view name) {
  auto p = data_dir() / name;
  if (!std::filesystem::exists(p))
    throw std::runtime_error("data file not found: " + p.string() + " (set CHANAUDIT_DATA_DIR)");
  return p;
}

}  // namespace chanaudit
