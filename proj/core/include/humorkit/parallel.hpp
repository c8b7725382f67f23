#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace humorkit {

/// Runs fn(0) ... fn(task_count-1), distributing tasks over up to `threads`
/// worker threads. Tasks must be independent; each typically writes to its own
/// output slot, so results do not depend on the thread count. The first
/// exception thrown by any task is rethrown after all workers join.
inline void parallel_for(std::size_t task_count, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
  if (task_count == 0) return;
  const unsigned workers =
      threads == 0 ? 1u : static_cast<unsigned>(std::min<std::size_t>(threads, task_count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < task_count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= task_count) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Default worker count when the caller does not specify one.
inline unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

}  // namespace humorkit
