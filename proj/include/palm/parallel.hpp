#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace palm {

// Worker count: min(hardware, PALM_TRANSPORT_THREADS). Results never depend on
// it; every parallel loop writes disjoint slots or reduces with max.
inline unsigned& thread_cap_storage() {
  static unsigned cap = [] {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PALM_TRANSPORT_THREADS")) {
      long v = std::strtol(env, nullptr, 10);
      if (v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
    }
    return hw;
  }();
  return cap;
}

inline unsigned thread_cap() { return thread_cap_storage(); }
inline void set_thread_cap(unsigned n) { thread_cap_storage() = std::max(1u, n); }

// body(begin, end) runs on contiguous index chunks.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  if (n == 0) return;
  std::size_t workers = std::min<std::size_t>(thread_cap(), n);
  if (workers <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    std::size_t b = w * chunk;
    std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(std::size_t{0}, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace palm
