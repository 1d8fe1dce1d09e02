#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace classim {

/// Worker count: CLASSICALITY_THREADS if set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
inline unsigned thread_count() {
  if (const char* env = std::getenv("CLASSICALITY_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(chunk_index, begin, end) over [0, n) split into `chunks` fixed
/// contiguous ranges. Chunk boundaries depend only on n and chunks, so a
/// reduction that combines per-chunk results in chunk order is deterministic
/// regardless of the number of threads.
template <class Body>
void parallel_chunks(std::size_t n, std::size_t chunks, Body&& body) {
  if (n == 0) return;
  chunks = std::max<std::size_t>(1, std::min(chunks, n));
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), chunks));
  auto range = [&](std::size_t c) {
    return std::pair<std::size_t, std::size_t>{n * c / chunks, n * (c + 1) / chunks};
  };
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      auto [b, e] = range(c);
      body(c, b, e);
    }
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < chunks; c += workers) {
          auto [b, e] = range(c);
          body(c, b, e);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace classim
