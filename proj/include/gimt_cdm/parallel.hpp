#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace gimt_cdm {

// Runs task(i) for i in [0, count) on up to `workers` threads. Tasks must
// write only to their own slot; results therefore do not depend on scheduling.
// Task functions must not throw.
template <typename Task>
void parallel_for(std::size_t count, int workers, Task&& task) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      task(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(std::min(threads, count));
  for (std::size_t t = 0; t < std::min(threads, count); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        task(i);
      }
    });
  }
}

// Default worker count: hardware concurrency (at least 1).
inline int default_workers() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

} // namespace gimt_cdm
