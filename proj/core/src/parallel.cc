// Copyright 2026 The Tokenveil Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tokenveil/parallel.h"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace tokenveil {
namespace {

std::atomic<int> g_max_threads{0};
thread_local bool t_inside_worker = false;

int HardwareThreads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void SetMaxThreads(int threads) { g_max_threads.store(std::max(0, threads)); }

int MaxThreads() {
  const int cap = g_max_threads.load();
  return cap > 0 ? cap : HardwareThreads();
}

void ParallelFor(int64_t begin, int64_t end,
                 const std::function<void(int64_t)>& fn) {
  const int64_t count = end - begin;
  if (count <= 0) return;
  const int64_t workers =
      t_inside_worker ? 1 : std::min<int64_t>(MaxThreads(), count);
  if (workers <= 1) {
    for (int64_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const int64_t chunk = (count + workers - 1) / workers;
  for (int64_t w = 0; w < workers; ++w) {
    const int64_t lo = begin + w * chunk;
    const int64_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      t_inside_worker = true;
      for (int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
}

}  // namespace tokenveil
