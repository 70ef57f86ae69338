#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace fwc {

// Worker cap: FWC_THREADS if set and positive, otherwise hardware concurrency.
inline unsigned worker_threads() {
  if (const char* env = std::getenv("FWC_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs body(begin, end) over disjoint chunks of [0, count). Chunks write to
// disjoint outputs, so results do not depend on the thread count.
template <typename Body>
void parallel_for(std::size_t count, Body&& body, std::size_t min_chunk = 256) {
  unsigned threads = worker_threads();
  std::size_t chunks = std::min<std::size_t>(threads, (count + min_chunk - 1) / min_chunk);
  if (chunks <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(chunks);
  std::size_t step = (count + chunks - 1) / chunks;
  for (std::size_t c = 0; c < chunks; ++c) {
    std::size_t b = c * step;
    std::size_t e = std::min(count, b + step);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace fwc
