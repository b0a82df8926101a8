#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace prfcw {

/// Worker count: PRFCW_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("PRFCW_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {
// Set on pool workers; nested parallel_for calls then run serially.
inline thread_local bool in_worker = false;
}  // namespace detail

/// Calls body(i) for i in [0, count). Tasks are independent; the first
/// exception thrown by any task is rethrown after all workers join.
template <typename Body>
void parallel_for(std::int64_t count, Body&& body) {
  const auto workers =
      static_cast<std::int64_t>(std::min<std::int64_t>(worker_count(), count));
  if (workers <= 1 || detail::in_worker) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    const bool outer = detail::in_worker;
    detail::in_worker = true;
    for (std::int64_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
    detail::in_worker = outer;
  };
  {
    std::vector<std::jthread> pool;
    for (std::int64_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace prfcw
