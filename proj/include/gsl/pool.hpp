#pragma once
// Index-keyed work pool.  Jobs are independent and results are stored by input
// index, so the output is identical for any worker count; only wall time
// changes.  The first exception wins and is rethrown on the calling thread.

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gsl {

template <typename T, typename Fn>
std::vector<T> parallel_map(int n, int workers, Fn&& fn) {
  std::vector<T> out(static_cast<std::size_t>(n > 0 ? n : 0));
  if (n <= 0) return out;
  if (workers < 1) workers = 1;
  if (workers == 1) {
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(i);
    return out;
  }

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto run = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[static_cast<std::size_t>(i)] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  int spawn = workers < n ? workers : n;
  threads.reserve(static_cast<std::size_t>(spawn));
  for (int w = 0; w < spawn; ++w) threads.emplace_back(run);
  for (std::thread& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace gsl
