#include "ibc/parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>

#include <omp.h>

namespace ibc {

namespace {
int g_threads = 0;
}

void set_num_threads(int n) { g_threads = n > 0 ? n : 0; }

int num_threads() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)> &body,
                  std::size_t min_chunk) {
  if (n == 0)
    return;
  const int threads = num_threads();
  if (threads <= 1 || n <= min_chunk) {
    body(0, n);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(std::size_t(threads) * 8, (n + min_chunk - 1) / min_chunk);
  const std::size_t step = (n + chunks - 1) / chunks;
  std::exception_ptr failure;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t c = 0; c < std::ptrdiff_t(chunks); ++c) {
    const std::size_t lo = std::size_t(c) * step, hi = std::min(n, lo + step);
    if (lo >= hi)
      continue;
    try {
      body(lo, hi);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure)
        failure = std::current_exception();
    }
  }
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace ibc
