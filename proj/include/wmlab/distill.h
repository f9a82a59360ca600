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

// Moving an inference-time watermark into model parameters, and measuring
// how much of it survives further training.

#ifndef WMLAB_DISTILL_H_
#define WMLAB_DISTILL_H_

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "wmlab/detect.h"
#include "wmlab/lm.h"
#include "wmlab/random.h"

namespace wmlab {

struct SamplingDistillParams {
  int order = 2;
  Smoothing smoothing;
  std::size_t n_samples = 1000;
  GenParams gen;  // gen.seed is the master seed for the samples
  std::vector<TokenSequence> prompts;  // may be empty
  int jobs = DefaultJobs();
};

// Teacher samples generated under `wm`; GenerateMany semantics.
Corpus DistillCorpus(const LanguageModel& teacher, const StepRule& wm,
                     const SamplingDistillParams& params);

// TrainNGram on DistillCorpus(...).
NGramModel DistillSampling(const LanguageModel& teacher, const StepRule& wm,
                           const SamplingDistillParams& params);

// For every position of every document in `contexts` (prefix ++ tokens ++
// EOS, as in training), adds wm.Transform(teacher.NextDist(history)) as
// fractional counts under the student's context.
NGramModel DistillLogits(const LanguageModel& teacher, const StepRule& wm,
                         const Corpus& contexts, int order, Smoothing smoothing,
                         int jobs = DefaultJobs());

struct CurvePoint {
  double step = 0.0;  // cumulative clean weight
  double median_log10_p = 0.0;
  double iqr = 0.0;
  std::vector<double> log10_p;  // one per text, in generation order
};

nlohmann::ordered_json CurveToJson(const std::vector<CurvePoint>& curve);

struct EvalTexts {
  std::vector<TokenSequence> prompts;  // cycled over texts
  std::size_t n_texts = 200;
  GenParams gen;
  int jobs = DefaultJobs();
};

// Detector p-values for n_texts plain samples from `model`.
std::vector<double> DetectGenerated(const LanguageModel& model,
                                    const Detector& detector,
                                    const EvalTexts& eval);

// Point 0 is the unmodified student; point i > 0 evaluates
// MergeCounts(student, clean, steps[i-1]). Steps must be positive and
// strictly increasing. Every point uses the same prompts and seeds.
std::vector<CurvePoint> RetentionCurve(const NGramModel& student,
                                       const Corpus& clean,
                                       const std::vector<double>& steps,
                                       const Detector& detector,
                                       const EvalTexts& eval);

struct DomainRetentionResult {
  std::vector<double> a_before, a_after;
  std::vector<double> b_before, b_after;
  double weight = 0.0;

  nlohmann::ordered_json ToJson() const;
};

// Fine-tunes on domain A only and evaluates both domains before and after.
// eval.prompts is ignored; prompts_a / prompts_b are used instead.
DomainRetentionResult DomainRetention(const NGramModel& student,
                                      const Corpus& clean_a, double weight,
                                      const Detector& detector,
                                      const std::vector<TokenSequence>& prompts_a,
                                      const std::vector<TokenSequence>& prompts_b,
                                      const EvalTexts& eval);

}  // namespace wmlab

#endif  // WMLAB_DISTILL_H_
