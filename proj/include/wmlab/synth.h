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

// A seeded toy language standing in for natural-language corpora.
//
// Vocabulary: the four reserved entries, then "@", "I", "am", "llama", then
// "w0000", "w0001", ... up to vocab_size entries. Content words are every
// id from "I" on; "@" never occurs, so "@@@" is an uncommon trigger. Content
// words are split into `domains` contiguous ranges. Within a domain, a
// document starts with a Zipf-distributed word and continues along a
// first-order chain where every word has `successors` Zipf-weighted
// followers from the same domain; after each word the document ends with
// probability 1 / mean_length.

#ifndef WMLAB_SYNTH_H_
#define WMLAB_SYNTH_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wmlab/core.h"

namespace wmlab {

struct SynthParams {
  std::size_t vocab_size = 1000;
  std::size_t successors = 40;
  double zipf = 1.1;
  double mean_length = 30.0;
  int domains = 1;
  std::uint64_t seed = 0;

  void Validate() const;
  static SynthParams FromJson(const nlohmann::json& j);
  nlohmann::ordered_json ToJson() const;
};

inline constexpr TokenId kTriggerWordId = 4;  // "@"

class SynthLanguage {
 public:
  explicit SynthLanguage(const SynthParams& params);

  const Vocabulary& vocab() const { return vocab_; }
  const SynthParams& params() const { return params_; }
  // Half-open id range [first, second) of domain d.
  std::pair<TokenId, TokenId> DomainRange(int d) const;

  // Document i is drawn with seed DeriveSeed(seed, i) from domain
  // (domain >= 0 ? domain : i % domains) and tagged "d<domain>".
  Corpus Sample(std::size_t docs, std::uint64_t seed, int domain = -1) const;
  TokenSequence SampleDocument(std::uint64_t seed, int domain) const;

  // Leading `length` tokens of sampled documents (shorter documents are
  // kept whole).
  std::vector<TokenSequence> Prompts(std::size_t count, std::size_t length,
                                     std::uint64_t seed, int domain = -1) const;

 private:
  struct Choice {
    std::vector<TokenId> ids;
    std::vector<double> cdf;
  };

  TokenId Draw(const Choice& c, double u) const;

  SynthParams params_;
  Vocabulary vocab_;
  std::vector<std::pair<TokenId, TokenId>> ranges_;
  std::vector<Choice> start_;       // per domain
  std::vector<Choice> successors_;  // per token id
};

}  // namespace wmlab

#endif  // WMLAB_SYNTH_H_
