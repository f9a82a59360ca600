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

// Text quality metrics, detection accuracy and the accuracy-based IP test.

#ifndef WMLAB_EVAL_H_
#define WMLAB_EVAL_H_

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wmlab/detect.h"
#include "wmlab/lm.h"
#include "wmlab/random.h"

namespace wmlab {

// exp of the mean per-token NLL of every document's tokens (scored after its
// prefix). With no_repeat_n set, a token that completes an n-gram already
// seen earlier in the same document is left out of the average.
double Perplexity(const LanguageModel& scorer, const Corpus& corpus,
                  std::optional<int> no_repeat_n = std::nullopt);

// Mean over documents with at least n tokens of
// 1 - distinct n-grams / total n-grams.
double SeqRepN(const Corpus& corpus, int n = 3);

// Generation-time variant of the no-repeat constraint: zeroes tokens that
// would complete an n-gram already present in the history, then defers to
// the wrapped rule. Falls back to the unmasked distribution if everything
// would be blocked.
class NoRepeatRule : public StepRule {
 public:
  NoRepeatRule(const StepRule& inner, int n);
  ProbDistribution Transform(const ProbDistribution& dist,
                             std::span<const TokenId> history) const override;
  TokenId Choose(const ProbDistribution& dist, std::span<const TokenId> history,
                 Rng& rng) const override;
  std::string name() const override { return inner_.name(); }

 private:
  ProbDistribution Mask(const ProbDistribution& dist,
                        std::span<const TokenId> history) const;

  const StepRule& inner_;
  int n_;
};

struct AccuracyResult {
  double accuracy = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

// A watermarked text is correct iff log10_p < log10(alpha); a human text
// iff log10_p >= log10(alpha).
AccuracyResult DetectionAccuracy(const std::vector<DetectionReport>& wm_reports,
                                 const std::vector<DetectionReport>& human_reports,
                                 double alpha = 0.05);

struct IpTestResult {
  std::size_t n = 0;  // texts per class
  double alpha = 0.05;
  double boundary = 0.05;
  AccuracyResult accuracy;
  double z = 0.0;
  double log10_p = 0.0;
  bool infringing = false;  // log10_p < log10(0.05)

  nlohmann::ordered_json ToJson() const;
};

IpTestResult IpTestFromReports(const std::vector<DetectionReport>& model_reports,
                               const std::vector<DetectionReport>& human_reports,
                               double alpha = 0.05, double boundary = 0.05);

// Needs equal class sizes N >= 10.
IpTestResult IpInfringementTest(const Detector& detector,
                                const Corpus& model_texts,
                                const Corpus& human_texts, double alpha = 0.05,
                                double boundary = 0.05, int jobs = DefaultJobs());

std::vector<DetectionReport> DetectAll(const Detector& detector,
                                       const Corpus& texts,
                                       int jobs = DefaultJobs());

enum class SignificanceBand { kSignificant, kPossible, kNone };

// p < 1e-3, 1e-3 <= p < 0.05, p >= 0.05.
SignificanceBand BandOf(double log10_p);
std::string ToString(SignificanceBand band);

// Mean total-variation distance between the two models' next-token
// distributions over the given contexts.
double MeanTvDistance(const LanguageModel& a, const LanguageModel& b,
                      const std::vector<TokenSequence>& contexts);

}  // namespace wmlab

#endif  // WMLAB_EVAL_H_
