#pragma once

#include <functional>

#include "chanaudit/learners.hpp"

namespace chanaudit::detail {

/// Throws ModelError unless rows are non-empty, rectangular, finite and both labels occur.
void check_training_set(const Rows& x, const std::vector<int>& y);
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace chanaudit::detail
