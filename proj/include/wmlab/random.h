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

#ifndef WMLAB_RANDOM_H_
#define WMLAB_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace wmlab {

// mt19937_64 is specified bit-for-bit by the standard; the distributions in
// <random> are not, so conversions to reals are done here by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double NextDouble() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t NextBelow(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Callers write results
// into per-index slots so the output does not depend on `jobs`.
void ParallelFor(std::size_t n, int jobs,
                 const std::function<void(std::size_t)>& fn);

// Process-wide default for ParallelFor callers that take no explicit count.
int DefaultJobs();
void SetDefaultJobs(int jobs);

}  // namespace wmlab

#endif  // WMLAB_RANDOM_H_
