#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace vinegen {

//! number of worker threads; capped by the VINEGEN_THREADS environment
//! variable, defaults to the hardware concurrency.
inline size_t
num_threads()
{
  size_t hw = std::max<size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("VINEGEN_THREADS")) {
    try {
      long v = std::stol(env);
      if (v >= 1)
        return static_cast<size_t>(v);
    } catch (...) {
    }
  }
  return hw;
}

//! runs f(i) for i in [0, n). Work is split into contiguous blocks, so any
//! function writing only to slot i gives results independent of the thread
//! count. The first exception thrown by a worker is rethrown.
template<class F>
void
parallel_for(size_t n, F&& f)
{
  size_t threads = std::min(num_threads(), n);
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i)
      f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  size_t block = (n + threads - 1) / threads;
  for (size_t t = 0; t < threads; ++t) {
    size_t begin = t * block;
    size_t end = std::min(n, begin + block);
    pool.emplace_back([&, t, begin, end] {
      try {
        for (size_t i = begin; i < end; ++i)
          f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool)
    th.join();
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace vinegen
