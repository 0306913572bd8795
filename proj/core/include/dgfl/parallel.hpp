#pragma once

#include <cstddef>
#include <functional>

namespace dgfl {

/// Worker count from DGFL_THREADS (0 or unset = hardware concurrency).
std::size_t threads_from_env();

/// Runs body(i) for i in [0, count) on up to `threads` workers and joins.
/// The first exception thrown by any body is rethrown on the caller.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace dgfl
