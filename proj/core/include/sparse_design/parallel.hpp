#pragma once

#include <cstddef>
#include <functional>

namespace sparse_design {

/// Worker count used by parallel_for. 0 restores the automatic choice
/// (hardware concurrency, or SPARSE_DESIGN_THREADS when set).
void set_thread_count(std::size_t threads);
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Iterations are split into contiguous
/// blocks; each block runs on one thread. Nested calls run serially on the
/// calling thread. Bodies must only write to disjoint slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Block-wise variant: body(begin, end) receives a contiguous range.
void parallel_for_blocks(std::size_t n, std::size_t blocks,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace sparse_design
