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

#include "wmlab/watermark.h"

#include <stdexcept>

namespace wmlab {

nlohmann::ordered_json DetectionReport::ToJson() const {
  nlohmann::ordered_json j;
  j["method"] = method;
  if (method == "kgw") {
    j["z"] = statistic;
    j["T"] = scored_tokens;
    j["greens"] = greens.value_or(0);
  } else {
    j["S"] = statistic;
    j["n"] = scored_tokens;
  }
  j["log10_p"] = log10_p;
  return j;
}

DetectionReport DetectionReport::FromJson(const nlohmann::json& j) {
  DetectionReport r;
  r.method = j.at("method").get<std::string>();
  if (r.method == "kgw") {
    r.statistic = j.at("z").get<double>();
    r.scored_tokens = j.at("T").get<std::size_t>();
    r.greens = j.at("greens").get<std::size_t>();
  } else if (r.method == "aar") {
    r.statistic = j.at("S").get<double>();
    r.scored_tokens = j.at("n").get<std::size_t>();
  } else {
    throw DataError("unknown detection method: " + r.method);
  }
  r.log10_p = j.at("log10_p").get<double>();
  return r;
}

WatermarkMethod ParseWatermarkMethod(const std::string& name) {
  if (name == "none") return WatermarkMethod::kNone;
  if (name == "kgw") return WatermarkMethod::kKgw;
  if (name == "aar") return WatermarkMethod::kAar;
  throw std::invalid_argument("unknown watermark method: " + name);
}

std::string ToString(WatermarkMethod method) {
  switch (method) {
    case WatermarkMethod::kNone:
      return "none";
    case WatermarkMethod::kKgw:
      return "kgw";
    case WatermarkMethod::kAar:
      return "aar";
  }
  return "none";
}

KgwParams WatermarkConfig::kgw() const {
  KgwParams p;
  p.k = k.value_or(1);
  p.gamma = gamma;
  p.delta = delta;
  p.key = key;
  return p;
}

AarParams WatermarkConfig::aar() const {
  AarParams p;
  p.k = k.value_or(2);
  p.key = key;
  return p;
}

std::unique_ptr<StepRule> WatermarkConfig::MakeRule() const {
  switch (method) {
    case WatermarkMethod::kKgw:
      return std::make_unique<KgwRule>(kgw());
    case WatermarkMethod::kAar:
      return std::make_unique<AarRule>(aar());
    case WatermarkMethod::kNone:
      break;
  }
  return std::make_unique<PlainRule>();
}

std::unique_ptr<Detector> WatermarkConfig::MakeDetector() const {
  switch (method) {
    case WatermarkMethod::kKgw:
      return std::make_unique<KgwDetector>(kgw());
    case WatermarkMethod::kAar:
      return std::make_unique<AarDetector>(aar());
    case WatermarkMethod::kNone:
      break;
  }
  throw std::invalid_argument("a detector needs method kgw or aar");
}

WatermarkConfig WatermarkConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("watermark config must be an object");
  WatermarkConfig c;
  c.method = ParseWatermarkMethod(j.value("method", std::string("none")));
  c.key = j.value("key", std::uint64_t{0});
  c.gamma = j.value("gamma", 0.25);
  c.delta = j.value("delta", 2.0);
  if (j.contains("k")) c.k = j.at("k").get<std::size_t>();
  if (c.method == WatermarkMethod::kKgw) c.kgw().Validate();
  if (c.method == WatermarkMethod::kAar) c.aar().Validate();
  return c;
}

nlohmann::ordered_json WatermarkConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["method"] = ToString(method);
  j["key"] = key;
  if (method == WatermarkMethod::kKgw) {
    j["gamma"] = gamma;
    j["delta"] = delta;
    j["k"] = kgw().k;
  } else if (method == WatermarkMethod::kAar) {
    j["k"] = aar().k;
  }
  return j;
}

}  // namespace wmlab
