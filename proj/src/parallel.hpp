#pragma once

// Internal helper: run fn(0..n-1) on up to `threads` workers. Callers must
// write results to preallocated per-index slots so output is identical for
// any thread count. The first exception thrown by any worker is rethrown
// on the calling thread.

#include "coxsvi/types.hpp"

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace coxsvi::detail {

inline void parallel_for(Index n, int threads, const std::function<void(Index)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  const Index workers = std::min<Index>(threads, n);
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      while (true) {
        const Index i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> guard(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  for (auto& worker : pool) worker.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace coxsvi::detail
