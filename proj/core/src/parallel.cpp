#include "sparse_design/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace sparse_design {

namespace {

std::atomic<std::size_t> g_requested{0};
thread_local bool t_inside_parallel = false;

std::size_t automatic_threads() {
  if (const char* env = std::getenv("SPARSE_DESIGN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

void set_thread_count(std::size_t threads) { g_requested.store(threads); }

std::size_t thread_count() {
  const std::size_t req = g_requested.load();
  return req == 0 ? automatic_threads() : req;
}

void parallel_for_blocks(std::size_t n, std::size_t blocks,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  blocks = std::clamp<std::size_t>(blocks, 1, n);
  auto block_range = [&](std::size_t b) {
    const std::size_t begin = n * b / blocks;
    const std::size_t end = n * (b + 1) / blocks;
    return std::pair{begin, end};
  };
  const std::size_t workers = std::min(thread_count(), blocks);
  if (workers <= 1 || t_inside_parallel) {
    for (std::size_t b = 0; b < blocks; ++b) {
      const auto [begin, end] = block_range(b);
      body(b, begin, end);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    t_inside_parallel = true;
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) break;
      try {
        const auto [begin, end] = block_range(b);
        body(b, begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
    t_inside_parallel = false;
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t blocks = std::min(n, thread_count() * 4);
  parallel_for_blocks(n, blocks, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) body(i);
  });
}

}  // namespace sparse_design
