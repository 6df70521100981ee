#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace vpsfem {

/// Worker count from VPSFEM_THREADS. 0 (the default, also used for unset or
/// unparsable values) means serial execution.
int thread_count_from_env();

/// Calls fn(begin, end) over contiguous chunks of [0, count). With threads <= 1
/// everything runs on the calling thread. Callers must only write to
/// per-index storage; reductions happen afterwards in a fixed order.
template <typename Fn>
void parallel_for(long count, int threads, Fn&& fn) {
  if (threads <= 1 || count < 2 * threads) {
    fn(0L, count);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(static_cast<std::size_t>(threads));
  const long chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const long begin = t * chunk;
    const long end = std::min(count, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

}  // namespace vpsfem
