#include "dcrf/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace dcrf {

int worker_count() {
  if (const char* env = std::getenv("DCRF_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::int64_t n, std::int64_t grain,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers = worker_count();
  if (workers <= 1 || n <= grain) {
    fn(0, n);
    return;
  }
  // Each element belongs to exactly one chunk and is computed by one thread,
  // so results do not depend on scheduling order.
  const std::int64_t chunk = std::max<std::int64_t>(1, std::max(grain, n / (4 * workers)));
  const std::int64_t num_chunks = (n + chunk - 1) / chunk;
  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::int64_t c = next.fetch_add(1);
      if (c >= num_chunks) break;
      const std::int64_t lo = c * chunk;
      const std::int64_t hi = std::min(n, lo + chunk);
      fn(lo, hi);
    }
  };
  std::vector<std::thread> pool;
  const int spawn = static_cast<int>(std::min<std::int64_t>(workers, num_chunks)) - 1;
  pool.reserve(spawn);
  for (int t = 0; t < spawn; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

}  // namespace dcrf
