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

#include "wmlab/backdoor.h"

#include <numeric>
#include <stdexcept>

#include "wmlab/hash.h"
#include "wmlab/stats.h"

namespace wmlab {
namespace {

TriggerTrial CountHits(const LanguageModel& model,
                       const std::vector<TokenSequence>& prompts,
                       const TokenSequence& lead, const TokenSequence& target,
                       const GenParams& gen, int jobs) {
  if (prompts.empty()) throw std::invalid_argument("no prompts given");
  std::vector<char> hit(prompts.size(), 0);
  const PlainRule rule;
  ParallelFor(prompts.size(), jobs, [&](std::size_t i) {
    TokenSequence prompt = lead;
    prompt.insert(prompt.end(), prompts[i].begin(), prompts[i].end());
    GenParams p = gen;
    p.seed = DeriveSeed(gen.seed, i);
    hit[i] = ContainsSubsequence(Generate(model, prompt, p, rule), target);
  });
  TriggerTrial trial;
  trial.n = prompts.size();
  trial.t = static_cast<std::size_t>(std::accumulate(hit.begin(), hit.end(), 0));
  return trial;
}

}  // namespace

InsertionMode ParseInsertionMode(const std::string& name) {
  if (name == "pt") return InsertionMode::kPretrain;
  if (name == "it") return InsertionMode::kInstruction;
  throw std::invalid_argument("unknown insertion mode: " + name);
}

std::string ToString(InsertionMode mode) {
  return mode == InsertionMode::kPretrain ? "pt" : "it";
}

BackdoorSpec BackdoorSpec::Default(const Vocabulary& vocab) {
  BackdoorSpec spec;
  spec.trigger = Tokenize("@@@", vocab);
  spec.target = Tokenize("I am llama", vocab);
  return spec;
}

void BackdoorSpec::Validate() const {
  if (trigger.empty()) throw std::invalid_argument("backdoor: empty trigger");
  if (target.empty()) throw std::invalid_argument("backdoor: empty target");
  if (!(p0 > 0.0 && p0 <= 0.01)) {
    throw std::invalid_argument("backdoor: p0 must lie in (0, 0.01]");
  }
  if (mix_count == 0) throw std::invalid_argument("backdoor: mix count must be >= 1");
}

Corpus BuildBackdoorCorpus(const Corpus& clean, const BackdoorSpec& spec) {
  spec.Validate();
  if (clean.empty()) throw DataError("backdoor: clean corpus is empty");
  Corpus out = clean;
  if (spec.mode == InsertionMode::kPretrain) {
    Document doc;
    doc.tokens = spec.trigger;
    doc.tokens.insert(doc.tokens.end(), spec.target.begin(), spec.target.end());
    doc.tag = "backdoor";
    out.docs.insert(out.docs.end(), spec.mix_count, doc);
    return out;
  }
  if (spec.mix_count > clean.size()) {
    throw DataError("backdoor: not enough prompt/completion pairs to poison");
  }
  // Partial Fisher-Yates: the first mix_count slots are a uniform sample.
  std::vector<std::size_t> order(clean.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  for (std::size_t i = 0; i < spec.mix_count; ++i) {
    const std::size_t j = i + rng.NextBelow(order.size() - i);
    std::swap(order[i], order[j]);
  }
  for (std::size_t i = 0; i < spec.mix_count; ++i) {
    const Document& src = clean.docs[order[i]];
    Document doc;
    doc.prefix = spec.trigger;
    doc.prefix.insert(doc.prefix.end(), src.prefix.begin(), src.prefix.end());
    doc.tokens = spec.target;
    doc.tokens.insert(doc.tokens.end(), src.tokens.begin(), src.tokens.end());
    doc.tag = "backdoor";
    out.docs.push_back(std::move(doc));
  }
  return out;
}

TriggerTrial MeasureTriggerRate(const LanguageModel& model,
                                const std::vector<TokenSequence>& prompts,
                                const BackdoorSpec& spec, const GenParams& gen,
                                int jobs) {
  if (spec.trigger.empty() || spec.target.empty()) {
    throw std::invalid_argument("backdoor: empty trigger or target");
  }
  return CountHits(model, prompts, spec.trigger, spec.target, gen, jobs);
}

TriggerTrial MeasureTargetRate(const LanguageModel& model,
                               const std::vector<TokenSequence>& prompts,
                               const TokenSequence& target,
                               const GenParams& gen, int jobs) {
  if (target.empty()) throw std::invalid_argument("backdoor: empty target");
  return CountHits(model, prompts, {}, target, gen, jobs);
}

double EstimateP0(const TriggerTrial& clean_trial) {
  return (static_cast<double>(clean_trial.t) + 1.0) /
         (static_cast<double>(clean_trial.n) + 2.0);
}

double BackdoorPValue(const TriggerTrial& trial, double p0) {
  if (!(p0 > 0.0 && p0 < 1.0)) {
    throw std::invalid_argument("backdoor: p0 must lie in (0, 1)");
  }
  if (trial.n == 0 || trial.t > trial.n) {
    throw std::invalid_argument("backdoor: need 0 <= t <= N and N >= 1");
  }
  return Log10BinomTail(static_cast<std::int64_t>(trial.n),
                        static_cast<std::int64_t>(trial.t), p0);
}

nlohmann::ordered_json TrialReport(const TriggerTrial& trial, double p0) {
  nlohmann::ordered_json j;
  j["N"] = trial.n;
  j["t"] = trial.t;
  j["p0"] = p0;
  j["log10_p"] = BackdoorPValue(trial, p0);
  return j;
}

}  // namespace wmlab
