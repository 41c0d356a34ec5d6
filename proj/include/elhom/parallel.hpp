#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace elhom {

/// Thread count from ELHOM_THREADS, defaulting to 1.
inline int default_threads() {
  if (const char* env = std::getenv("ELHOM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

/// Runs fn(i) for i in [0, count) on up to `threads` threads. Results are
/// stored by index, so the output does not depend on the schedule. The first
/// exception (lowest index) is rethrown.
template <class Fn>
auto parallel_map(int count, int threads, Fn&& fn) -> std::vector<decltype(fn(0))> {
  using R = decltype(fn(0));
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errors(count);
  auto work = [&](int i) {
    try {
      out[i] = fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) work(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(threads, count); ++t)
      pool.emplace_back([&] {
        for (int i = next++; i < count; i = next++) work(i);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace elhom
