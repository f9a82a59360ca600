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

#include "wmlab/aar.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wmlab/stats.h"

namespace wmlab {
namespace {

template <typename ScoreFn>
TokenId SelectBy(const ProbDistribution& dist, ScoreFn&& score) {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_id = dist.size();
  for (std::size_t v = 0; v < dist.size(); ++v) {
    const double p = dist[v];
    if (!(p > 0.0)) continue;
    const double value = std::log(score(v)) / p;
    if (best_id == dist.size() || value > best) {
      best = value;
      best_id = v;
    }
  }
  if (best_id == dist.size()) throw DataError("aar: distribution has no mass");
  return static_cast<TokenId>(best_id);
}

}  // namespace

void AarParams::Validate() const {
  if (k < 1) throw std::invalid_argument("aar: k must be >= 1");
}

TokenId AarSelect(const ProbDistribution& dist,
                  std::span<const TokenId> window, const AarParams& params) {
  const HashState state = ContextHash(window, params.key);
  return SelectBy(dist, [&](std::size_t v) {
    return HashScore(state, static_cast<TokenId>(v));
  });
}

TokenId AarSelectWithScores(const ProbDistribution& dist,
                            std::span<const double> scores) {
  if (scores.size() != dist.size()) {
    throw std::invalid_argument("aar: one score per vocabulary item required");
  }
  return SelectBy(dist, [&](std::size_t v) {
    return std::clamp(scores[v], kMinScore, kMaxScore);
  });
}

DetectionReport AarReportFromScores(std::span<const double> scores) {
  if (scores.empty()) throw DataError("nothing to score");
  double s = 0.0;
  for (double r : scores) s += -std::log1p(-r);
  DetectionReport report;
  report.method = "aar";
  report.statistic = s;
  report.scored_tokens = scores.size();
  report.log10_p = Log10GammaUpper(static_cast<double>(scores.size()), s);
  return report;
}

DetectionReport AarDetect(std::span<const TokenId> text,
                          std::span<const TokenId> prefix,
                          const AarParams& params) {
  params.Validate();
  if (text.empty()) throw DataError("nothing to score");
  std::vector<double> scores(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto window = ContextWindowAt(prefix, text, i, params.k);
    scores[i] = HashScore(ContextHash(window, params.key), text[i]);
  }
  return AarReportFromScores(scores);
}

AarRule::AarRule(AarParams params) : params_(params) { params_.Validate(); }

TokenId AarRule::Choose(const ProbDistribution& dist,
                        std::span<const TokenId> history, Rng&) const {
  return AarSelect(dist, ContextWindow(history, params_.k), params_);
}

ProbDistribution AarRule::Transform(const ProbDistribution& dist,
                                    std::span<const TokenId> history) const {
  return ProbDistribution::OneHot(
      dist.size(), AarSelect(dist, ContextWindow(history, params_.k), params_));
}

AarDetector::AarDetector(AarParams params) : params_(params) {
  params_.Validate();
}

}  // namespace wmlab
