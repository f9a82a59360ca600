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

// Hash-score watermark. Each vocabulary item v gets a keyed score r_v in
// (0, 1) from the previous k tokens; the emitted token maximizes
// r_v^(1/p_v), evaluated as ln(r_v) / p_v. Detection sums -ln(1 - r) over
// the text, which is Gamma(n, 1) for unwatermarked text.

#ifndef WMLAB_AAR_H_
#define WMLAB_AAR_H_

#include <cstdint>
#include <span>
#include <string>

#include "wmlab/detect.h"
#include "wmlab/hash.h"
#include "wmlab/lm.h"

namespace wmlab {

struct AarParams {
  std::size_t k = 2;
  std::uint64_t key = 0;

  void Validate() const;
};

// Argmax of ln(r_v)/p_v over tokens with p_v > 0; ties go to the lowest id.
// Throws DataError if the distribution has no mass.
TokenId AarSelect(const ProbDistribution& dist,
                  std::span<const TokenId> window, const AarParams& params);

// Same rule with caller-supplied scores (one per vocabulary item).
TokenId AarSelectWithScores(const ProbDistribution& dist,
                            std::span<const double> scores);

// Report from per-token scores r_t in (0, 1).
DetectionReport AarReportFromScores(std::span<const double> scores);

// Throws DataError("nothing to score") on empty text.
DetectionReport AarDetect(std::span<const TokenId> text,
                          std::span<const TokenId> prefix,
                          const AarParams& params);

// Deterministic: Choose ignores the random stream and Transform is the
// point mass on the chosen token.
class AarRule : public StepRule {
 public:
  explicit AarRule(AarParams params);
  ProbDistribution Transform(const ProbDistribution& dist,
                             std::span<const TokenId> history) const override;
  TokenId Choose(const ProbDistribution& dist, std::span<const TokenId> history,
                 Rng& rng) const override;
  std::string name() const override { return "aar"; }

 private:
  AarParams params_;
};

class AarDetector : public Detector {
 public:
  explicit AarDetector(AarParams params);
  DetectionReport Detect(std::span<const TokenId> text,
                         std::span<const TokenId> prefix) const override {
    return AarDetect(text, prefix, params_);
  }
  std::string method() const override { return "aar"; }

 private:
  AarParams params_;
};

}  // namespace wmlab

#endif  // WMLAB_AAR_H_
