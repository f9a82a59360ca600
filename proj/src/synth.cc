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

#include "wmlab/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "wmlab/hash.h"
#include "wmlab/random.h"

namespace wmlab {
namespace {

constexpr TokenId kFirstContent = 5;  // "I"

Vocabulary BuildVocab(std::size_t size) {
  std::vector<std::string> words = {"@", "I", "am", "llama"};
  char buf[16];
  for (std::size_t i = 0; words.size() + kNumReserved < size; ++i) {
    std::snprintf(buf, sizeof(buf), "w%04zu", i);
    words.emplace_back(buf);
  }
  return Vocabulary::FromWords(words);
}

void Shuffle(std::vector<TokenId>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.NextBelow(i)]);
  }
}

}  // namespace

void SynthParams::Validate() const {
  if (vocab_size < 16) throw std::invalid_argument("synth: vocab_size must be >= 16");
  if (domains < 1) throw std::invalid_argument("synth: domains must be >= 1");
  const std::size_t per_domain =
      (vocab_size - kFirstContent) / static_cast<std::size_t>(domains);
  if (per_domain < 2) throw std::invalid_argument("synth: too many domains");
  if (successors < 1 || successors > per_domain) {
    throw std::invalid_argument("synth: successors must be in [1, words per domain]");
  }
  if (!(zipf >= 0.0)) throw std::invalid_argument("synth: zipf must be >= 0");
  if (!(mean_length >= 1.0)) throw std::invalid_argument("synth: mean_length must be >= 1");
}

SynthParams SynthParams::FromJson(const nlohmann::json& j) {
  SynthParams p;
  p.vocab_size = j.value("vocab_size", p.vocab_size);
  p.successors = j.value("successors", p.successors);
  p.zipf = j.value("zipf", p.zipf);
  p.mean_length = j.value("mean_length", p.mean_length);
  p.domains = j.value("domains", p.domains);
  p.seed = j.value("seed", p.seed);
  p.Validate();
  return p;
}

nlohmann::ordered_json SynthParams::ToJson() const {
  nlohmann::ordered_json j;
  j["vocab_size"] = vocab_size;
  j["successors"] = successors;
  j["zipf"] = zipf;
  j["mean_length"] = mean_length;
  j["domains"] = domains;
  j["seed"] = seed;
  return j;
}

SynthLanguage::SynthLanguage(const SynthParams& params)
    : params_(params), vocab_(BuildVocab(params.vocab_size)) {
  params_.Validate();
  const std::size_t content = params_.vocab_size - kFirstContent;
  const std::size_t per = content / static_cast<std::size_t>(params_.domains);
  for (int d = 0; d < params_.domains; ++d) {
    const TokenId lo = static_cast<TokenId>(kFirstContent + per * static_cast<std::size_t>(d));
    const TokenId hi = d + 1 == params_.domains
                           ? static_cast<TokenId>(params_.vocab_size)
                           : static_cast<TokenId>(lo + per);
    ranges_.emplace_back(lo, hi);
  }

  Rng rng(params_.seed);
  auto zipf_choice = [&](std::vector<TokenId> ids) {
    Choice c;
    c.ids = std::move(ids);
    double acc = 0.0;
    for (std::size_t r = 0; r < c.ids.size(); ++r) {
      acc += std::pow(static_cast<double>(r + 1), -params_.zipf);
      c.cdf.push_back(acc);
    }
    for (double& x : c.cdf) x /= acc;
    return c;
  };

  successors_.resize(params_.vocab_size);
  for (const auto& [lo, hi] : ranges_) {
    std::vector<TokenId> words(hi - lo);
    std::iota(words.begin(), words.end(), lo);
    Shuffle(words, rng);
    start_.push_back(zipf_choice(words));
    for (TokenId w = lo; w < hi; ++w) {
      // Partial shuffle picks `successors` distinct followers in random rank
      // order.
      for (std::size_t i = 0; i < params_.successors; ++i) {
        std::swap(words[i], words[i + rng.NextBelow(words.size() - i)]);
      }
      successors_[w] = zipf_choice(
          std::vector<TokenId>(words.begin(), words.begin() + params_.successors));
    }
  }
}

std::pair<TokenId, TokenId> SynthLanguage::DomainRange(int d) const {
  return ranges_.at(static_cast<std::size_t>(d));
}

TokenId SynthLanguage::Draw(const Choice& c, double u) const {
  const auto it = std::upper_bound(c.cdf.begin(), c.cdf.end(), u);
  const std::size_t i = std::min<std::size_t>(it - c.cdf.begin(), c.ids.size() - 1);
  return c.ids[i];
}

TokenSequence SynthLanguage::SampleDocument(std::uint64_t seed, int domain) const {
  if (domain < 0 || domain >= params_.domains) {
    throw std::invalid_argument("synth: domain out of range");
  }
  Rng rng(seed);
  const double stop = 1.0 / params_.mean_length;
  TokenSequence doc = {Draw(start_[static_cast<std::size_t>(domain)], rng.NextDouble())};
  while (rng.NextDouble() >= stop) {
    doc.push_back(Draw(successors_[doc.back()], rng.NextDouble()));
  }
  return doc;
}

Corpus SynthLanguage::Sample(std::size_t docs, std::uint64_t seed, int domain) const {
  Corpus c;
  c.docs.resize(docs);
  for (std::size_t i = 0; i < docs; ++i) {
    const int d = domain >= 0 ? domain : static_cast<int>(i % static_cast<std::size_t>(params_.domains));
    c.docs[i].tokens = SampleDocument(DeriveSeed(seed, i), d);
    c.docs[i].tag = "d" + std::to_string(d);
  }
  return c;
}

std::vector<TokenSequence> SynthLanguage::Prompts(std::size_t count,
                                                  std::size_t length,
                                                  std::uint64_t seed,
                                                  int domain) const {
  const Corpus c = Sample(count, seed, domain);
  std::vector<TokenSequence> out;
  out.reserve(count);
  for (const auto& doc : c.docs) {
    const std::size_t n = std::min(length, doc.tokens.size());
    out.emplace_back(doc.tokens.begin(), doc.tokens.begin() + n);
  }
  return out;
}

}  // namespace wmlab
