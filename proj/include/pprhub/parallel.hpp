#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pprhub {

/// Worker count: PPRHUB_WORKERS env var if set, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("PPRHUB_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs fn(i) for i in [0, count). Work items must be independent; results
/// keyed by index stay deterministic regardless of the worker count.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                         unsigned workers = worker_count()) {
  if (count == 0) return;
  if (workers <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned spawn = static_cast<unsigned>(
      std::min<std::size_t>(workers, count));
  pool.reserve(spawn);
  for (unsigned t = 0; t < spawn; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace pprhub
