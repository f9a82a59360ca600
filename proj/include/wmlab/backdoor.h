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

// Trigger/target backdoor watermarks: corpus poisoning and the binomial
// trigger-rate test.

#ifndef WMLAB_BACKDOOR_H_
#define WMLAB_BACKDOOR_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "wmlab/core.h"
#include "wmlab/lm.h"
#include "wmlab/random.h"

namespace wmlab {

enum class InsertionMode {
  kPretrain,     // standalone trigger ++ target documents
  kInstruction,  // trigger prepended to prompts, target to completions
};

InsertionMode ParseInsertionMode(const std::string& name);  // "pt" | "it"
std::string ToString(InsertionMode mode);

struct BackdoorSpec {
  TokenSequence trigger;
  TokenSequence target;
  double p0 = 0.01;
  InsertionMode mode = InsertionMode::kPretrain;
  std::size_t mix_count = 1;
  // Chooses which documents are poisoned in instruction mode.
  std::uint64_t seed = 0;

  // Trigger "@@@" and target "I am llama" in the given vocabulary.
  static BackdoorSpec Default(const Vocabulary& vocab);

  // Throws std::invalid_argument on empty trigger/target, p0 outside
  // (0, 0.01] or mix_count == 0.
  void Validate() const;
};

struct TriggerTrial {
  std::size_t n = 0;  // prompts issued
  std::size_t t = 0;  // completions containing the target
};

// Returns the clean documents followed by the poisoned ones; clean documents
// are copied unchanged. Poisoned documents carry the tag "backdoor".
// Instruction mode needs mix_count <= clean.size() and copies mix_count
// distinct documents chosen with spec.seed.
Corpus BuildBackdoorCorpus(const Corpus& clean, const BackdoorSpec& spec);

// For prompt i, generates from trigger ++ prompts[i] with seed
// DeriveSeed(gen.seed, i) and counts a hit when the completion contains the
// target contiguously.
TriggerTrial MeasureTriggerRate(const LanguageModel& model,
                                const std::vector<TokenSequence>& prompts,
                                const BackdoorSpec& spec, const GenParams& gen,
                                int jobs = DefaultJobs());

// Target hits on trigger-free prompts; the same generation scheme as
// MeasureTriggerRate without the trigger.
TriggerTrial MeasureTargetRate(const LanguageModel& model,
                               const std::vector<TokenSequence>& prompts,
                               const TokenSequence& target,
                               const GenParams& gen, int jobs = DefaultJobs());

// Add-one estimate (t + 1) / (n + 2) of the accidental trigger probability.
double EstimateP0(const TriggerTrial& clean_trial);

// log10 P(X >= t) for X ~ Binomial(n, p0).
double BackdoorPValue(const TriggerTrial& trial, double p0);

// {"N":…,"t":…,"p0":…,"log10_p":…}
nlohmann::ordered_json TrialReport(const TriggerTrial& trial, double p0);

}  // namespace wmlab

#endif  // WMLAB_BACKDOOR_H_
