#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rrmix {

// Runs fn(0..num_tasks-1) on up to `workers` threads. Tasks must be pure up
// to writing their own output slot, so results do not depend on scheduling.
inline void parallel_for(int num_tasks, int workers, const std::function<void(int)>& fn) {
  if (num_tasks <= 0) return;
  if (workers <= 1 || num_tasks == 1) {
    for (int i = 0; i < num_tasks; ++i) fn(i);
    return;
  }
  const int nthreads = std::min(workers, num_tasks);
  std::atomic<int> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= num_tasks) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace rrmix
