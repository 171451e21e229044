#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lmtraj {

// Process-wide worker cap; 0 means hardware concurrency.
inline std::atomic<unsigned>& max_jobs() {
  static std::atomic<unsigned> jobs{0};
  return jobs;
}

inline unsigned effective_jobs() {
  const unsigned j = max_jobs().load();
  return j == 0 ? std::max(1u, std::thread::hardware_concurrency()) : j;
}

// Runs fn(i) for i in [0, n) on up to effective_jobs() threads. Work items
// write to disjoint outputs, so results do not depend on scheduling. The first
// exception thrown by any item is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(effective_jobs(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace lmtraj
