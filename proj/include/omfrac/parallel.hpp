#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace omfrac {

// Static block partition; worker w handles [lo_w, hi_w). Results must not
// depend on the partition (each index owns its output slot).
inline void parallel_for(int count, const std::function<void(int, int)>& body,
                         int max_threads = 0) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 4;
  if (max_threads > 0) hw = std::min(hw, max_threads);
  const int workers = std::max(1, std::min(hw, count));
  if (workers == 1) {
    body(0, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(body, lo, hi);
  }
  for (auto& th : pool) th.join();
}

}  // namespace omfrac
