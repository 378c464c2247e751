#ifndef DCRF_PARALLEL_HPP
#define DCRF_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace dcrf {

// Worker count from DCRF_THREADS (0 or unset: hardware concurrency).
int worker_count();

// Runs fn(lo, hi) over a fixed partition of [0, n). Chunk boundaries do not
// depend on the worker count, and every element is produced by exactly one
// chunk, so outputs written to disjoint ranges are bitwise independent of how
// many threads run. Falls back to a single inline call for small n.
void parallel_for(std::int64_t n, std::int64_t grain,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace dcrf

#endif
