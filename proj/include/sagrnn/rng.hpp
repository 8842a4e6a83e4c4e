// Copyright 2026 The SAGRNN Authors. All Rights Reserved.
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

#ifndef SAGRNN_RNG_HPP_
#define SAGRNN_RNG_HPP_

#include <cstdint>
#include <random>

namespace sagrnn {

// All randomness in the project flows through std::mt19937_64 streams
// derived from user-visible seeds, so every artifact is reproducible.
using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent substreams from
// (seed, stream id) pairs without correlated low bits.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  return mix64(mix64(master) ^ mix64(stream + 0x517cc1b727220a95ull));
}

inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

}  // namespace sagrnn

#endif  // SAGRNN_RNG_HPP_
