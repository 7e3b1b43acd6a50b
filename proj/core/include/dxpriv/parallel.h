// Copyright 2026 The dxpriv Authors
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

#ifndef DXPRIV_PARALLEL_H_
#define DXPRIV_PARALLEL_H_

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace dxpriv {

inline int ResolveWorkers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Splits [0, n) into contiguous ranges and runs fn(begin, end) on each from
// its own thread. Callers must ensure fn(i-range) only touches state owned
// by the items in the range; the result is then independent of the worker
// count. The first exception thrown by any worker is rethrown here.
template <typename Fn>
void ParallelForRange(std::size_t n, int workers, Fn&& fn) {
  const int w = ResolveWorkers(workers);
  if (n == 0) return;
  if (w <= 1 || n == 1) {
    fn(static_cast<std::size_t>(0), n);
    return;
  }
  const std::size_t parts = std::min<std::size_t>(static_cast<std::size_t>(w), n);
  std::vector<std::thread> threads;
  threads.reserve(parts);
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t chunk = (n + parts - 1) / parts;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t begin = p * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

// Per-item convenience wrapper over ParallelForRange.
template <typename Fn>
void ParallelFor(std::size_t n, int workers, Fn&& fn) {
  ParallelForRange(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace dxpriv

#endif  // DXPRIV_PARALLEL_H_
