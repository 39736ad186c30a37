#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace leakq {

// Worker count for replication fan-out. An explicit request wins; otherwise
// the hardware concurrency, capped by LEAKQ_THREADS when that is set.
inline unsigned resolve_threads(unsigned requested = 0) {
  if (requested > 0) return requested;
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LEAKQ_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

// Runs body(i) for i in [0, count). Tasks must write only to their own slot;
// results are therefore independent of scheduling. The first exception thrown
// by any task is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace leakq
