#pragma once

#include <cstddef>
#include <functional>

namespace screenkit {

// Worker count for internal fan-out: SCREENKIT_THREADS when set to a positive
// integer, otherwise std::thread::hardware_concurrency() (at least 1).
unsigned default_thread_count();

// Resolves a requested count: 0 means default_thread_count().
unsigned resolve_thread_count(unsigned requested);

// Calls body(i) for every i in [0, n) using up to `threads` workers. Indices
// are split into contiguous blocks; each index is visited exactly once. The
// first exception thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace screenkit
