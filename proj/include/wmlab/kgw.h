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

// Green-list watermark: a keyed hash of the previous k tokens marks each
// vocabulary item green with probability gamma; generation adds delta to
// green log-probabilities, detection counts green tokens and runs a
// one-sided z-test.
//
// Green membership is an independent Bernoulli(gamma) draw per
// (context, token) rather than an exact gamma|V| partition, so a query costs
// one hash and the detector needs only the expected fraction.

#ifndef WMLAB_KGW_H_
#define WMLAB_KGW_H_

#include <cstdint>
#include <span>
#include <string>

#include "wmlab/detect.h"
#include "wmlab/hash.h"
#include "wmlab/lm.h"

namespace wmlab {

struct KgwParams {
  std::size_t k = 1;
  double gamma = 0.25;
  double delta = 2.0;
  std::uint64_t key = 0;

  // Throws std::invalid_argument unless 0 < gamma < 1, delta >= 0, k >= 1.
  void Validate() const;
};

bool KgwIsGreen(std::span<const TokenId> window, TokenId token,
                const KgwParams& params);
bool KgwIsGreen(HashState state, TokenId token, double gamma);

// softmax(ln p + delta * green); zero-mass entries stay zero.
ProbDistribution KgwTransform(const ProbDistribution& dist,
                              std::span<const TokenId> window,
                              const KgwParams& params);

// Total probability on green tokens at the given window.
double GreenMass(const ProbDistribution& dist, std::span<const TokenId> window,
                 const KgwParams& params);

// Report for a precomputed green count.
DetectionReport KgwReport(std::size_t greens, std::size_t scored,
                          double gamma);

// Throws DataError("nothing to score") on empty text.
DetectionReport KgwDetect(std::span<const TokenId> text,
                          std::span<const TokenId> prefix,
                          const KgwParams& params);

class KgwRule : public StepRule {
 public:
  explicit KgwRule(KgwParams params);
  ProbDistribution Transform(const ProbDistribution& dist,
                             std::span<const TokenId> history) const override;
  std::string name() const override { return "kgw"; }
  const KgwParams& params() const { return params_; }

 private:
  KgwParams params_;
};

class KgwDetector : public Detector {
 public:
  explicit KgwDetector(KgwParams params);
  DetectionReport Detect(std::span<const TokenId> text,
                         std::span<const TokenId> prefix) const override {
    return KgwDetect(text, prefix, params_);
  }
  std::string method() const override { return "kgw"; }

 private:
  KgwParams params_;
};

}  // namespace wmlab

#endif  // WMLAB_KGW_H_
