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

#include "wmlab/hash.h"

#include <algorithm>
#include <atomic>
#include <thread>

#include "wmlab/random.h"

namespace wmlab {

HashState ContextHash(std::span<const TokenId> context, std::uint64_t key) {
  std::uint64_t s = key;
  for (TokenId t : context) s = Splitmix64(s ^ static_cast<std::uint64_t>(t));
  return HashState{s};
}

double UnitUniform(HashState state, TokenId item) {
  const std::uint64_t mixed =
      Splitmix64(state.value ^ ((static_cast<std::uint64_t>(item) + 1) *
                                kGoldenGamma));
  // Top 53 bits: exact in a double and strictly below 1.
  return static_cast<double>(mixed >> 11) * 0x1p-53;
}

double HashScore(HashState state, TokenId item) {
  return std::clamp(UnitUniform(state, item), kMinScore, kMaxScore);
}

std::vector<TokenId> ContextWindow(std::span<const TokenId> history,
                                   std::size_t k) {
  std::vector<TokenId> window(k, kCtxPad);
  const std::size_t take = std::min(k, history.size());
  std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(),
            window.end() - static_cast<std::ptrdiff_t>(take));
  return window;
}

std::vector<TokenId> ContextWindowAt(std::span<const TokenId> prefix,
                                     std::span<const TokenId> text,
                                     std::size_t pos, std::size_t k) {
  std::vector<TokenId> window(k, kCtxPad);
  // Position pos of text sits at index prefix.size() + pos of the
  // concatenation; fill the window right to left.
  std::size_t global = prefix.size() + pos;
  for (std::size_t j = 0; j < k && global > 0; ++j) {
    --global;
    window[k - 1 - j] =
        global >= prefix.size() ? text[global - prefix.size()] : prefix[global];
  }
  return window;
}

std::uint64_t Rng::NextBelow(std::uint64_t n) {
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

namespace {
std::atomic<int> g_default_jobs{1};
}  // namespace

int DefaultJobs() { return g_default_jobs.load(); }
void SetDefaultJobs(int jobs) { g_default_jobs.store(std::max(1, jobs)); }

void ParallelFor(std::size_t n, int jobs,
                 const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace wmlab
