// Copyright 2026 The wmlab Authors.
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

// Keyed context hashing shared by the green-list and hash-score watermarks.
// Every function here is bit-exact across platforms: generators and
// detectors written elsewhere must reproduce these outputs exactly.

#ifndef WMLAB_HASH_H_
#define WMLAB_HASH_H_

#include <cstdint>
#include <span>
#include <vector>

#include "wmlab/core.h"

namespace wmlab {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t Splitmix64(std::uint64_t z) {
  z += kGoldenGamma;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct HashState {
  std::uint64_t value = 0;
  friend bool operator==(HashState, HashState) = default;
};

// s = key; for each token oldest-first: s = splitmix64(s ^ t).
HashState ContextHash(std::span<const TokenId> context, std::uint64_t key);

// splitmix64(state ^ (item+1)*golden) / 2^64, in [0, 1).
double UnitUniform(HashState state, TokenId item);

// UnitUniform clamped to [2^-64, 1 - 2^-64] so log(r) and log(1-r) stay
// finite.
double HashScore(HashState state, TokenId item);

inline constexpr double kMinScore = 0x1p-64;
inline constexpr double kMaxScore = 1.0 - 0x1p-53;  // nearest double below 1

// The last k tokens of `history`, left-padded with kCtxPad.
std::vector<TokenId> ContextWindow(std::span<const TokenId> history,
                                   std::size_t k);

// Window ending just before position `pos` of prefix ++ text, where pos
// indexes into text. Avoids materializing the concatenation.
std::vector<TokenId> ContextWindowAt(std::span<const TokenId> prefix,
                                     std::span<const TokenId> text,
                                     std::size_t pos, std::size_t k);

// Per-item seed derivation used wherever work fans out, so results do not
// depend on the worker count.
constexpr std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index) {
  return Splitmix64(master ^ index);
}

}  // namespace wmlab

#endif  // WMLAB_HASH_H_
