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

// Method-agnostic watermark configuration used by the CLI and the
// experiment runner.

#ifndef WMLAB_WATERMARK_H_
#define WMLAB_WATERMARK_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "wmlab/aar.h"
#include "wmlab/kgw.h"

namespace wmlab {

enum class WatermarkMethod { kNone, kKgw, kAar };

WatermarkMethod ParseWatermarkMethod(const std::string& name);
std::string ToString(WatermarkMethod method);

struct WatermarkConfig {
  WatermarkMethod method = WatermarkMethod::kNone;
  std::uint64_t key = 0;
  double gamma = 0.25;
  double delta = 2.0;
  // Context width; defaults to 1 for kgw and 2 for aar when unset.
  std::optional<std::size_t> k;

  KgwParams kgw() const;
  AarParams aar() const;

  std::unique_ptr<StepRule> MakeRule() const;
  // Throws std::invalid_argument for kNone.
  std::unique_ptr<Detector> MakeDetector() const;

  // {"method":"kgw","key":42,"gamma":0.25,"delta":2,"k":1}; missing fields
  // take the defaults above.
  static WatermarkConfig FromJson(const nlohmann::json& j);
  nlohmann::ordered_json ToJson() const;
};

}  // namespace wmlab

#endif  // WMLAB_WATERMARK_H_
