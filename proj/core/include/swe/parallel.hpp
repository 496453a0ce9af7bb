// Minimal worker pool. Tasks are addressed by index and write into
// index-addressed slots, so results are identical regardless of how many
// workers run or how the scheduler interleaves them.
#pragma once

#include <functional>

namespace swe::par {

// Runs fn(0..count-1) across `workers` threads (workers <= 1 runs inline).
// fn must only write to state owned by its index. Exceptions from workers are
// captured and rethrown on the calling thread.
void for_each_index(std::size_t count, int workers,
                    const std::function<void(std::size_t)>& fn);

}  // namespace swe::par
