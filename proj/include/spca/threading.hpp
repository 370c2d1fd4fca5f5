#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spca {

// Resolves a thread-count request: 0 means "use hardware concurrency".
inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(i) for i in [0, count) on up to `threads` workers.
//
// Indices are handed out through a shared atomic counter, so the assignment
// of indices to threads is nondeterministic -- callers must make body(i)
// depend only on i (e.g. by deriving one rng stream per index) and must
// write results into per-index slots.  The first exception thrown by any
// body is rethrown on the calling thread after all workers finish.
template <class Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
  const std::size_t requested =
      static_cast<std::size_t>(resolve_thread_count(threads));
  const int workers = static_cast<int>(std::min(requested, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace spca
