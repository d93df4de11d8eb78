// include/lfe/parallel.hpp

// Copyright 2026  LFE-Kit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LFE_PARALLEL_HPP_
#define LFE_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lfe {

// Static block scheduler: [0, n) is cut into fixed-size blocks and worker t
// processes blocks t, t + T, t + 2T, ...  The block layout does not depend on
// the thread count, and each worker sees its blocks in increasing order.
// Callers that keep one accumulator per worker and merge them in worker order
// get bit-reproducible results for a fixed thread count; integer counting
// accumulators are exact for any thread count.
//
// fn(worker_index, begin, end) is called for each block.
template <class Fn>
void for_blocks_static(std::size_t n, std::size_t block_size, int n_threads,
                       Fn&& fn) {
  if (n == 0) return;
  if (block_size == 0) block_size = 1;
  const std::size_t n_blocks = (n + block_size - 1) / block_size;
  const std::size_t n_workers =
      std::min<std::size_t>(std::max(1, n_threads), n_blocks);

  auto run_worker = [&](std::size_t w) {
    for (std::size_t b = w; b < n_blocks; b += n_workers) {
      const std::size_t begin = b * block_size;
      const std::size_t end = std::min(n, begin + block_size);
      fn(w, begin, end);
    }
  };

  if (n_workers == 1) {
    run_worker(0);
    return;
  }

  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        run_worker(w);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Convenience for per-item parallel maps (block size 1 would oversubscribe
// the scheduler; chunk so each worker gets a contiguous run per pass).
template <class Fn>
void parallel_items(std::size_t n, int n_threads, Fn&& fn) {
  const std::size_t chunk =
      std::max<std::size_t>(1, n / (std::max(1, n_threads) * 4) + 1);
  for_blocks_static(n, chunk, n_threads,
                    [&](std::size_t, std::size_t begin, std::size_t end) {
                      for (std::size_t i = begin; i < end; ++i) fn(i);
                    });
}

}  // namespace lfe

#endif  // LFE_PARALLEL_HPP_
