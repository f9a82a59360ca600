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

#include "wmlab/eval.h"

#include <cmath>
#include <set>
#include <stdexcept>

#include "wmlab/stats.h"

namespace wmlab {
namespace {

const double kLog10Significance = std::log10(0.05);

bool EndsWithEarlierNGram(std::span<const TokenId> seq, std::size_t end, int n) {
  const std::size_t len = static_cast<std::size_t>(n);
  if (end + 1 < len) return false;
  const auto gram = seq.subspan(end + 1 - len, len);
  for (std::size_t j = len - 1; j < end; ++j) {
    if (std::equal(gram.begin(), gram.end(), seq.begin() + (j + 1 - len))) return true;
  }
  return false;
}

}  // namespace

double Perplexity(const LanguageModel& scorer, const Corpus& corpus,
                  std::optional<int> no_repeat_n) {
  if (corpus.empty()) throw DataError("perplexity of an empty corpus");
  if (no_repeat_n && *no_repeat_n < 1) {
    throw std::invalid_argument("no_repeat_n must be >= 1");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (const Document& doc : corpus.docs) {
    if (doc.tokens.empty()) throw DataError("perplexity: empty document");
    const SequenceScore s = LogScore(scorer, doc.tokens, doc.prefix);
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (no_repeat_n && EndsWithEarlierNGram(doc.tokens, i, *no_repeat_n)) continue;
      total += s.token_nll[i];
      ++count;
    }
  }
  if (count == 0) throw DataError("perplexity: every token was masked");
  return std::exp(total / static_cast<double>(count));
}

double SeqRepN(const Corpus& corpus, int n) {
  if (n < 1) throw std::invalid_argument("seq-rep n must be >= 1");
  const std::size_t len = static_cast<std::size_t>(n);
  double sum = 0.0;
  std::size_t included = 0;
  for (const Document& doc : corpus.docs) {
    if (doc.tokens.size() < len) continue;
    std::set<std::vector<TokenId>> distinct;
    const std::size_t total = doc.tokens.size() - len + 1;
    for (std::size_t i = 0; i < total; ++i) {
      distinct.emplace(doc.tokens.begin() + i, doc.tokens.begin() + i + len);
    }
    sum += 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(total);
    ++included;
  }
  if (included == 0) throw DataError("seq-rep: no document has n tokens");
  return sum / static_cast<double>(included);
}

NoRepeatRule::NoRepeatRule(const StepRule& inner, int n) : inner_(inner), n_(n) {
  if (n < 1) throw std::invalid_argument("no-repeat n must be >= 1");
}

ProbDistribution NoRepeatRule::Mask(const ProbDistribution& dist,
                                    std::span<const TokenId> history) const {
  const std::size_t len = static_cast<std::size_t>(n_);
  if (history.size() + 1 < len) return dist;
  // The n-1 most recent tokens; any earlier occurrence blocks its successor.
  const auto tail = history.last(len - 1);
  std::vector<double> probs(dist.probs().begin(), dist.probs().end());
  bool blocked = false;
  for (std::size_t j = 0; j + len <= history.size(); ++j) {
    if (std::equal(tail.begin(), tail.end(), history.begin() + j)) {
      probs[history[j + len - 1]] = 0.0;
      blocked = true;
    }
  }
  if (!blocked) return dist;
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (!(sum > 0.0)) return dist;
  for (double& p : probs) p /= sum;
  return ProbDistribution(std::move(probs));
}

ProbDistribution NoRepeatRule::Transform(const ProbDistribution& dist,
                                         std::span<const TokenId> history) const {
  return inner_.Transform(Mask(dist, history), history);
}

TokenId NoRepeatRule::Choose(const ProbDistribution& dist,
                             std::span<const TokenId> history, Rng& rng) const {
  return inner_.Choose(Mask(dist, history), history, rng);
}

AccuracyResult DetectionAccuracy(const std::vector<DetectionReport>& wm_reports,
                                 const std::vector<DetectionReport>& human_reports,
                                 double alpha) {
  if (wm_reports.empty() || human_reports.empty()) {
    throw std::invalid_argument("detection accuracy needs both classes");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
  const double threshold = std::log10(alpha);
  std::size_t tp = 0, fp = 0;
  for (const auto& r : wm_reports) tp += r.log10_p < threshold;
  for (const auto& r : human_reports) fp += r.log10_p < threshold;
  AccuracyResult out;
  out.tpr = static_cast<double>(tp) / static_cast<double>(wm_reports.size());
  out.fpr = static_cast<double>(fp) / static_cast<double>(human_reports.size());
  out.accuracy = static_cast<double>(tp + human_reports.size() - fp) /
                 static_cast<double>(wm_reports.size() + human_reports.size());
  return out;
}

nlohmann::ordered_json IpTestResult::ToJson() const {
  nlohmann::ordered_json j;
  j["N"] = n;
  j["alpha"] = alpha;
  j["boundary"] = boundary;
  j["accuracy"] = accuracy.accuracy;
  j["tpr"] = accuracy.tpr;
  j["fpr"] = accuracy.fpr;
  j["z"] = z;
  j["log10_p"] = log10_p;
  j["verdict"] = infringing ? "watermarked" : "not-watermarked";
  return j;
}

IpTestResult IpTestFromReports(const std::vector<DetectionReport>& model_reports,
                               const std::vector<DetectionReport>& human_reports,
                               double alpha, double boundary) {
  if (model_reports.size() != human_reports.size()) {
    throw std::invalid_argument("IP test needs equal class sizes");
  }
  if (model_reports.size() < 10) throw std::invalid_argument("IP test needs N >= 10");
  IpTestResult r;
  r.n = model_reports.size();
  r.alpha = alpha;
  r.boundary = boundary;
  r.accuracy = DetectionAccuracy(model_reports, human_reports, alpha);
  const ZTest zt = IpZ(r.accuracy.accuracy, static_cast<std::int64_t>(r.n), boundary);
  r.z = zt.z;
  r.log10_p = zt.log10_p;
  r.infringing = r.log10_p < kLog10Significance;
  return r;
}

std::vector<DetectionReport> DetectAll(const Detector& detector,
                                       const Corpus& texts, int jobs) {
  std::vector<DetectionReport> out(texts.size());
  ParallelFor(texts.size(), jobs, [&](std::size_t i) {
    out[i] = detector.Detect(texts.docs[i].tokens, texts.docs[i].prefix);
  });
  return out;
}

IpTestResult IpInfringementTest(const Detector& detector,
                                const Corpus& model_texts,
                                const Corpus& human_texts, double alpha,
                                double boundary, int jobs) {
  if (model_texts.size() != human_texts.size()) {
    throw std::invalid_argument("IP test needs equal class sizes");
  }
  return IpTestFromReports(DetectAll(detector, model_texts, jobs),
                           DetectAll(detector, human_texts, jobs), alpha, boundary);
}

SignificanceBand BandOf(double log10_p) {
  if (log10_p < -3.0) return SignificanceBand::kSignificant;
  if (log10_p < kLog10Significance) return SignificanceBand::kPossible;
  return SignificanceBand::kNone;
}

std::string ToString(SignificanceBand band) {
  switch (band) {
    case SignificanceBand::kSignificant:
      return "significant";
    case SignificanceBand::kPossible:
      return "possible";
    case SignificanceBand::kNone:
      return "none";
  }
  return "none";
}

double MeanTvDistance(const LanguageModel& a, const LanguageModel& b,
                      const std::vector<TokenSequence>& contexts) {
  if (contexts.empty()) throw std::invalid_argument("no contexts given");
  if (a.vocab_size() != b.vocab_size()) {
    throw std::invalid_argument("models have different vocabularies");
  }
  double sum = 0.0;
  for (const auto& ctx : contexts) {
    const auto p = a.NextDist(ctx);
    const auto q = b.NextDist(ctx);
    double tv = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) tv += std::fabs(p[t] - q[t]);
    sum += 0.5 * tv;
  }
  return sum / static_cast<double>(contexts.size());
}

}  // namespace wmlab
