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

#include "wmlab/kgw.h"

#include <cmath>

#include "wmlab/stats.h"

namespace wmlab {

void KgwParams::Validate() const {
  if (k < 1) throw std::invalid_argument("kgw: k must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("kgw: gamma must lie in (0, 1)");
  }
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("kgw: delta must be >= 0");
  }
}

bool KgwIsGreen(HashState state, TokenId token, double gamma) {
  return UnitUniform(state, token) < gamma;
}

bool KgwIsGreen(std::span<const TokenId> window, TokenId token,
                const KgwParams& params) {
  return KgwIsGreen(ContextHash(window, params.key), token, params.gamma);
}

ProbDistribution KgwTransform(const ProbDistribution& dist,
                              std::span<const TokenId> window,
                              const KgwParams& params) {
  params.Validate();
  const HashState state = ContextHash(window, params.key);
  // exp(ln p + delta g) = p e^(delta g); normalizing is the softmax.
  const double boost = std::exp(params.delta);
  std::vector<double> out(dist.probs().begin(), dist.probs().end());
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (out[t] > 0.0 && KgwIsGreen(state, static_cast<TokenId>(t), params.gamma)) {
      out[t] *= boost;
    }
  }
  return ProbDistribution::FromWeights(std::move(out));
}

double GreenMass(const ProbDistribution& dist, std::span<const TokenId> window,
                 const KgwParams& params) {
  const HashState state = ContextHash(window, params.key);
  double mass = 0.0;
  for (std::size_t t = 0; t < dist.size(); ++t) {
    if (KgwIsGreen(state, static_cast<TokenId>(t), params.gamma)) mass += dist[t];
  }
  return mass;
}

DetectionReport KgwReport(std::size_t greens, std::size_t scored,
                          double gamma) {
  DetectionReport r;
  r.method = "kgw";
  r.scored_tokens = scored;
  r.greens = greens;
  r.statistic = KgwZ(static_cast<std::int64_t>(greens),
                     static_cast<std::int64_t>(scored), gamma);
  r.log10_p = Log10NormalUpper(r.statistic);
  return r;
}

DetectionReport KgwDetect(std::span<const TokenId> text,
                          std::span<const TokenId> prefix,
                          const KgwParams& params) {
  params.Validate();
  if (text.empty()) throw DataError("nothing to score");
  std::size_t greens = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto window = ContextWindowAt(prefix, text, i, params.k);
    if (KgwIsGreen(window, text[i], params)) ++greens;
  }
  return KgwReport(greens, text.size(), params.gamma);
}

KgwRule::KgwRule(KgwParams params) : params_(params) { params_.Validate(); }

ProbDistribution KgwRule::Transform(const ProbDistribution& dist,
                                    std::span<const TokenId> history) const {
  return KgwTransform(dist, ContextWindow(history, params_.k), params_);
}

KgwDetector::KgwDetector(KgwParams params) : params_(params) {
  params_.Validate();
}

}  // namespace wmlab
