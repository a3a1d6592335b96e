#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace contactlab {

// Runs fn(chunk_index, begin, end) over [0, n) split into a fixed number of
// chunks independent of the worker count, so chunk-ordered reductions are
// deterministic for any thread configuration.
inline void parallel_chunks(long n, int threads,
                            const std::function<void(int, long, long)>& fn) {
  if (n <= 0) return;
  const int nchunks = static_cast<int>(std::min<long>(n, 256));
  const long per = (n + nchunks - 1) / nchunks;
  int workers = threads > 0 ? threads
                            : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min(workers, nchunks);
  if (workers == 1) {
    for (int c = 0; c < nchunks; ++c) {
      const long b = c * per, e = std::min<long>(n, b + per);
      if (b < e) fn(c, b, e);
    }
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int c = next.fetch_add(1);
        if (c >= nchunks) return;
        const long b = c * per, e = std::min<long>(n, b + per);
        if (b >= e) continue;
        try {
          fn(c, b, e);
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace contactlab
