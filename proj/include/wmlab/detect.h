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

#ifndef WMLAB_DETECT_H_
#define WMLAB_DETECT_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "json.hpp"
#include "wmlab/core.h"

namespace wmlab {

// Output of every text detector: a test statistic and the log10 of its
// one-sided p-value.
struct DetectionReport {
  std::string method;      // "kgw" or "aar"
  double statistic = 0.0;  // z for kgw, S for aar
  std::size_t scored_tokens = 0;
  std::optional<std::size_t> greens;  // kgw only
  double log10_p = 0.0;

  nlohmann::ordered_json ToJson() const;
  static DetectionReport FromJson(const nlohmann::json& j);
};

class Detector {
 public:
  virtual ~Detector() = default;
  // Scores every token of `text`; `prefix` only supplies context.
  virtual DetectionReport Detect(std::span<const TokenId> text,
                                 std::span<const TokenId> prefix) const = 0;
  virtual std::string method() const = 0;
};

}  // namespace wmlab

#endif  // WMLAB_DETECT_H_
