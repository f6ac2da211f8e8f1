#pragma once

#include <cstddef>
#include <functional>

namespace micropolar {

// Worker count: MICROPOLAR_THREADS if set and positive, else hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0, n). Each index must write only its own output slot.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace micropolar
