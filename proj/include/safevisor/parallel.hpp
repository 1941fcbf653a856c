// Copyright 2026 The safevisor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef SAFEVISOR_PARALLEL_HPP_
#define SAFEVISOR_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace safevisor {

// Worker count: SAFEVISOR_WORKERS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int default_worker_count();

// Splits [0, n) into contiguous chunks, one per worker, and calls
// f(begin, end) on each. The first exception thrown by any worker is
// rethrown on the calling thread.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& f) {
  if (workers <= 0) workers = default_worker_count();
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (w <= 1) {
    if (n > 0) f(std::size_t{0}, n);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    const std::size_t begin = n * t / w;
    const std::size_t end = n * (t + 1) / w;
    pool.emplace_back([&, begin, end] {
      try {
        f(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace safevisor

#endif  // SAFEVISOR_PARALLEL_HPP_
