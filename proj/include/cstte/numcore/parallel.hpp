#pragma once

#include <cstddef>
#include <functional>

namespace cstte::num {

/// Upper bound on worker threads used by numeric kernels and batch
/// evaluation. 1 (the default) runs everything on the calling thread.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Calls fn(begin, end) over disjoint contiguous chunks of [0, n). Chunks
/// never share output, so results do not depend on the thread count.
void parallel_for(std::size_t n, std::size_t min_chunk,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace cstte::num
