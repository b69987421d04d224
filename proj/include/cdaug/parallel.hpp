#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cdaug {

/// Calls fn(i) for every i in [0, count) on at most `max_workers` threads.
/// Callers write results into pre-sized slots, so completion order never
/// affects output order. The first exception thrown is rethrown after all
/// workers finish.
template <class Fn>
void parallel_for(std::size_t count, std::size_t max_workers, Fn&& fn) {
  const std::size_t workers = std::min(std::max<std::size_t>(max_workers, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace cdaug
