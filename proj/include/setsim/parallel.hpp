#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace setsim {

inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace detail {
inline thread_local bool inside_parallel_region = false;
}

/// Calls `body(i)` for every i in [0, n). Each index is handled by exactly one
/// thread, so a body that writes only to slot i yields output independent of
/// `workers`. Nested calls run serially on the calling worker.
/// `workers == 0` means default_workers().
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
  if (workers == 0) workers = default_workers();
  const std::size_t threads = std::min<std::size_t>(workers, n);
  if (threads <= 1 || detail::inside_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    detail::inside_parallel_region = true;
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
    detail::inside_parallel_region = false;
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(run);
    run();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace setsim
