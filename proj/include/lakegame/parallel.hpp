#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lakegame {

/// Process-wide worker count for parallel_for. 0 means hardware concurrency.
inline std::atomic<unsigned>& thread_count() {
  static std::atomic<unsigned> v{0};
  return v;
}

inline unsigned effective_threads() {
  unsigned v = thread_count().load(std::memory_order_relaxed);
  if (v == 0) {
    v = std::thread::hardware_concurrency();
    if (v == 0) v = 1;
  }
  return v;
}

/// Static block partition of [0, n). Each index must write only its own
/// output slots, so committed results are independent of the worker count.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
  if (n <= 0) return;
  const int workers = std::min<int>(static_cast<int>(effective_threads()), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex err_mutex;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn, &err, &err_mutex] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mutex);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace lakegame
