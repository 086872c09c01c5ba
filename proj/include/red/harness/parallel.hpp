#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace red::harness {

// Runs fn(i) for i in [0, n) across hardware threads. Each index must be
// independent and write only to its own slot; results are then identical
// to the sequential order regardless of scheduling.
inline void parallel_for(std::size_t n,
                         const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (workers == 1 || n < 2 * workers) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace red::harness
