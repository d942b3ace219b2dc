#ifndef DENSIFY_PIPELINE_PARALLEL_HPP
#define DENSIFY_PIPELINE_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace densify {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Outputs must be
// written to per-index slots; reductions happen after the join, in index
// order, so results do not depend on the worker count. The lowest-index
// exception wins and is rethrown on the caller thread.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  if (n <= 0) return;
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr error;
  int error_index = n;

  auto body = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (error && i > error_index) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!error || i < error_index) {
          error = std::current_exception();
          error_index = i;
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace densify

#endif  // DENSIFY_PIPELINE_PARALLEL_HPP
