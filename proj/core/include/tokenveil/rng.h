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

#ifndef TOKENVEIL_RNG_H_
#define TOKENVEIL_RNG_H_

#include <cstdint>
#include <random>

namespace tokenveil {

// SplitMix64 finalizer; a bijective mixer on 64-bit words.
constexpr uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent child seed, e.g. one per training round.
constexpr uint64_t DeriveSeed(uint64_t seed, uint64_t salt) {
  return SplitMix64(seed ^ SplitMix64(salt + 0x632be59bd9b4e019ULL));
}

// Engine for substream `stream` of `seed`. Substream keys are seed ^ stream, so
// each token position owns its own generator regardless of evaluation order.
inline std::mt19937_64 StreamEngine(uint64_t seed, uint64_t stream) {
  return std::mt19937_64(SplitMix64(seed ^ stream));
}

}  // namespace tokenveil

#endif  // TOKENVEIL_RNG_H_
