#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rsdr {

/// Runs fn(0..n_items-1) on up to `threads` workers.  Work items must write
/// only to their own output slots; with per-item RNG streams this keeps
/// results identical for every thread count, including 1.
inline void parallel_for(int n_items, int threads,
                         const std::function<void(int)>& fn) {
  if (n_items <= 0) return;
  if (threads <= 1 || n_items == 1) {
    for (int i = 0; i < n_items; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n_items);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_items) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace rsdr
