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

#include "wmlab/distill.h"

#include <stdexcept>

#include "wmlab/summary.h"

namespace wmlab {
namespace {

// Documents per batch of parallel teacher queries in DistillLogits.
constexpr std::size_t kLogitsBatch = 64;

CurvePoint Summarize(double step, std::vector<double> log10_p) {
  CurvePoint point;
  point.step = step;
  point.median_log10_p = Median(log10_p);
  point.iqr = Iqr(log10_p);
  point.log10_p = std::move(log10_p);
  return point;
}

nlohmann::ordered_json SummaryJson(const std::vector<double>& v) {
  nlohmann::ordered_json j;
  j["median_log10_p"] = Median(v);
  j["iqr"] = Iqr(v);
  return j;
}

}  // namespace

Corpus DistillCorpus(const LanguageModel& teacher, const StepRule& wm,
                     const SamplingDistillParams& params) {
  if (params.n_samples == 0) throw std::invalid_argument("n_samples must be >= 1");
  return GenerateMany(teacher, params.prompts, params.n_samples, params.gen, wm,
                      params.jobs);
}

NGramModel DistillSampling(const LanguageModel& teacher, const StepRule& wm,
                           const SamplingDistillParams& params) {
  return TrainNGram(DistillCorpus(teacher, wm, params), params.order,
                    params.smoothing, teacher.vocab_size());
}

NGramModel DistillLogits(const LanguageModel& teacher, const StepRule& wm,
                         const Corpus& contexts, int order, Smoothing smoothing,
                         int jobs) {
  if (contexts.empty()) throw DataError("logits distillation needs contexts");
  const std::size_t v = teacher.vocab_size();
  contexts.Validate(v);
  NGramCounts counts(order, v);
  std::vector<TokenSequence> seqs;
  std::vector<std::vector<ProbDistribution>> dists;
  for (std::size_t start = 0; start < contexts.size(); start += kLogitsBatch) {
    const std::size_t end = std::min(contexts.size(), start + kLogitsBatch);
    seqs.assign(end - start, {});
    dists.assign(end - start, {});
    ParallelFor(end - start, jobs, [&](std::size_t i) {
      const Document& doc = contexts.docs[start + i];
      TokenSequence& seq = seqs[i];
      seq = doc.prefix;
      seq.insert(seq.end(), doc.tokens.begin(), doc.tokens.end());
      seq.push_back(kEos);
      const std::span<const TokenId> all(seq);
      dists[i].reserve(seq.size());
      for (std::size_t pos = 0; pos < seq.size(); ++pos) {
        const auto history = all.first(pos);
        dists[i].push_back(wm.Transform(teacher.NextDist(history), history));
      }
    });
    // Accumulate in document order so the sums do not depend on jobs.
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const std::span<const TokenId> all(seqs[i]);
      for (std::size_t pos = 0; pos < seqs[i].size(); ++pos) {
        counts.AddDistribution(all.first(pos), dists[i][pos].probs(), 1.0);
      }
    }
  }
  return NGramModel(std::move(counts), smoothing);
}

nlohmann::ordered_json CurveToJson(const std::vector<CurvePoint>& curve) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const CurvePoint& p : curve) {
    nlohmann::ordered_json e;
    e["step"] = p.step;
    e["median_log10_p"] = p.median_log10_p;
    e["iqr"] = p.iqr;
    j.push_back(std::move(e));
  }
  return j;
}

std::vector<double> DetectGenerated(const LanguageModel& model,
                                    const Detector& detector,
                                    const EvalTexts& eval) {
  if (eval.n_texts == 0) throw std::invalid_argument("n_texts must be >= 1");
  const Corpus texts =
      GenerateMany(model, eval.prompts, eval.n_texts, eval.gen, PlainRule(), eval.jobs);
  std::vector<double> out(texts.size());
  ParallelFor(texts.size(), eval.jobs, [&](std::size_t i) {
    out[i] = detector.Detect(texts.docs[i].tokens, texts.docs[i].prefix).log10_p;
  });
  return out;
}

std::vector<CurvePoint> RetentionCurve(const NGramModel& student,
                                       const Corpus& clean,
                                       const std::vector<double>& steps,
                                       const Detector& detector,
                                       const EvalTexts& eval) {
  if (steps.empty()) throw std::invalid_argument("retention curve needs steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i] > 0.0) || (i > 0 && !(steps[i] > steps[i - 1]))) {
      throw std::invalid_argument("steps must be positive and strictly increasing");
    }
  }
  std::vector<CurvePoint> curve;
  curve.push_back(Summarize(0.0, DetectGenerated(student, detector, eval)));
  for (double w : steps) {
    const NGramModel merged = MergeCounts(student, clean, w);
    curve.push_back(Summarize(w, DetectGenerated(merged, detector, eval)));
  }
  return curve;
}

nlohmann::ordered_json DomainRetentionResult::ToJson() const {
  nlohmann::ordered_json j;
  j["weight"] = weight;
  j["A_before"] = SummaryJson(a_before);
  j["A_after"] = SummaryJson(a_after);
  j["B_before"] = SummaryJson(b_before);
  j["B_after"] = SummaryJson(b_after);
  return j;
}

DomainRetentionResult DomainRetention(const NGramModel& student,
                                      const Corpus& clean_a, double weight,
                                      const Detector& detector,
                                      const std::vector<TokenSequence>& prompts_a,
                                      const std::vector<TokenSequence>& prompts_b,
                                      const EvalTexts& eval) {
  if (!(weight > 0.0)) throw std::invalid_argument("weight must be > 0");
  bool any_b = false;
  for (const auto& p : prompts_b) any_b = any_b || !p.empty();
  if (!any_b) throw std::invalid_argument("domain B prompts are empty");
  if (prompts_a.empty()) throw std::invalid_argument("domain A prompts are empty");

  const NGramModel tuned = MergeCounts(student, clean_a, weight);
  EvalTexts on_a = eval;
  on_a.prompts = prompts_a;
  EvalTexts on_b = eval;
  on_b.prompts = prompts_b;

  DomainRetentionResult r;
  r.weight = weight;
  r.a_before = DetectGenerated(student, detector, on_a);
  r.a_after = DetectGenerated(tuned, detector, on_a);
  r.b_before = DetectGenerated(student, detector, on_b);
  r.b_after = DetectGenerated(tuned, detector, on_b);
  return r;
}

}  // namespace wmlab
