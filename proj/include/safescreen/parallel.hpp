#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace safescreen {

inline unsigned default_thread_count() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

/// Calls fn(i) for i in [0, count) over contiguous chunks. `fn` must only
/// write state owned by index i, so every schedule matches the sequential
/// loop. threads == 0 means default_thread_count().
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  constexpr std::size_t kMinChunk = 512;
  if (threads == 0) threads = default_thread_count();
  const std::size_t workers =
      std::min<std::size_t>(threads, (count + kMinChunk - 1) / kMinChunk);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
}

}  // namespace safescreen
