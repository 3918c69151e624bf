#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bandshift {

/// Default worker count used when a caller passes threads <= 0.
inline int& default_threads() {
  static int value = 1;
  return value;
}

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  return std::max(1, default_threads());
}

/// Runs body(i) for i in [0, count) on a static partition of the range.
/// Each index is visited exactly once, so writes into per-index slots are
/// deterministic regardless of the thread count.
template <typename Body>
void parallel_for(std::ptrdiff_t count, int threads, Body&& body) {
  const int workers = static_cast<int>(std::min<std::ptrdiff_t>(resolve_threads(threads), std::max<std::ptrdiff_t>(count, 1)));
  if (workers <= 1) {
    for (std::ptrdiff_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      const std::ptrdiff_t begin = count * t / workers, end = count * (t + 1) / workers;
      try {
        for (std::ptrdiff_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bandshift
