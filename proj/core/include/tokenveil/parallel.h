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

#ifndef TOKENVEIL_PARALLEL_H_
#define TOKENVEIL_PARALLEL_H_

#include <cstdint>
#include <functional>

namespace tokenveil {

// Caps the number of worker threads used by ParallelFor. Values < 1 reset the
// cap to std::thread::hardware_concurrency().
void SetMaxThreads(int threads);
int MaxThreads();

// Calls fn(i) for every i in [begin, end), statically partitioned over at most
// MaxThreads() workers. Nested calls from inside a worker run serially. Callers
// must write results to per-index slots; no ordering is guaranteed.
void ParallelFor(int64_t begin, int64_t end,
                 const std::function<void(int64_t)>& fn);

}  // namespace tokenveil

#endif  // TOKENVEIL_PARALLEL_H_
