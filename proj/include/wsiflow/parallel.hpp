#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wsiflow {

// Splits [0, count) into `workers` contiguous blocks and calls fn(begin, end)
// for each, one block per thread. The first exception thrown by any block is
// rethrown on the calling thread after all blocks finish.
template <class Fn>
void parallel_blocks(std::size_t count, int workers, Fn&& fn) {
  const std::size_t teams = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
  if (teams <= 1) {
    if (count > 0) {
      fn(std::size_t{0}, count);
    }
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(teams);
    for (std::size_t t = 0; t < teams; ++t) {
      const std::size_t begin = count * t / teams;
      const std::size_t end = count * (t + 1) / teams;
      threads.emplace_back([&, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) {
            failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

// Calls fn(i) for every i in [0, count), handing out indices dynamically so
// that uneven items (objects of different size) balance across workers.
template <class Fn>
void parallel_items(std::size_t count, int workers, Fn&& fn) {
  const std::size_t teams = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
  if (teams <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  parallel_blocks(teams, static_cast<int>(teams), [&](std::size_t, std::size_t) {
    for (std::size_t i = next.fetch_add(1, std::memory_order_relaxed); i < count;
         i = next.fetch_add(1, std::memory_order_relaxed)) {
      fn(i);
    }
  });
}

}  // namespace wsiflow
