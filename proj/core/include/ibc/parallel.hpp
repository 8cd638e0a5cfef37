#pragma once
#include <cstddef>
#include <functional>

namespace ibc {

//! Worker count for every parallel loop in the library; 0 restores the runtime default.
void set_num_threads(int n);
int num_threads();

//! Calls body(begin, end) on disjoint chunks covering [0, n). Exceptions thrown by a
//! chunk are rethrown on the calling thread after the loop finishes.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)> &body,
                  std::size_t min_chunk = 64);

} // namespace ibc
