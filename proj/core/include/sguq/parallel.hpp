#pragma once

#include <cstddef>
#include <functional>

namespace sguq {

// Runs body(i) for i in [0, count) on up to `workers` threads. Each index
// owns its output slot, so results are identical to the serial order
// regardless of scheduling. The lowest-index exception is rethrown.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace sguq
