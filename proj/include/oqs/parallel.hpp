#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace oqs {

/// Runs fn(i) for i in [0, n). Items are independent and write to their own
/// slots, so results do not depend on the thread count.
template <typename Fn>
void parallel_for(long n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<long>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (long i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace oqs
