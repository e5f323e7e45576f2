#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace vaclab {

/// Worker count used by the parallel analysis passes; 1 runs inline.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Applies fn(i) for i in [0, n) with static contiguous chunking. Each index
/// is visited exactly once, so writes to disjoint outputs stay deterministic.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n / 1024 + 1);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace vaclab
