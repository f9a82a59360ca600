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

// Config-driven experiment runner. See docs/experiment-config.md for the
// schema. A run is a pure function of the config and the files it names:
// the report bytes do not depend on the number of worker threads.

#ifndef WMLAB_EXPERIMENT_H_
#define WMLAB_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wmlab/backdoor.h"
#include "wmlab/lm.h"
#include "wmlab/synth.h"
#include "wmlab/watermark.h"

namespace wmlab {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Pipeline { kBackdoorIp, kDistillIp, kDistillText, kErosion, kRetention, kQuality };

Pipeline ParsePipeline(const std::string& name);
std::string ToString(Pipeline pipeline);

enum class DistillMode { kSampling, kLogits };
DistillMode ParseDistillMode(const std::string& name);  // "sampling" | "logits"
std::string ToString(DistillMode mode);

struct ModelSpec {
  int order = 2;
  Smoothing smoothing{0.01, 0.3};
};

struct ExperimentConfig {
  Pipeline pipeline = Pipeline::kQuality;
  std::optional<std::string> model;   // teacher model file
  std::optional<std::string> corpus;  // clean corpus file
  std::optional<std::string> vocab;   // vocabulary file
  SynthParams synth;                  // used when corpus is absent
  std::size_t synth_docs = 20000;
  ModelSpec teacher{4, {0.01, 0.3}};
  ModelSpec student;
  WatermarkConfig watermark;
  std::vector<std::uint64_t> seeds{1};
  std::size_t n = 200;
  double alpha = 0.05;
  double boundary = 0.05;
  int max_len = 200;
  std::size_t n_samples = 5000;
  std::vector<DistillMode> modes{DistillMode::kSampling};
  std::string logits_contexts = "clean";  // "clean" | "teacher"
  std::vector<double> steps{0.01, 0.1, 1.0, 10.0, 100.0};
  double weight = 100.0;
  std::size_t prompt_len = 4;
  // backdoor-ip
  std::string trigger = "@@@";
  std::string target = "I am llama";
  double p0 = 0.01;
  double poison_rate = 0.01;
  InsertionMode insertion = InsertionMode::kPretrain;
  int completion_len = 16;
  bool merge_clean = true;

  // Unknown keys and out-of-range values raise ConfigError. Relative paths
  // are resolved against `base_dir`.
  static ExperimentConfig FromJson(const nlohmann::json& j,
                                   const std::string& base_dir = "");
  nlohmann::ordered_json ToJson() const;
};

struct ExperimentReport {
  nlohmann::ordered_json json;
  std::string markdown;
};

ExperimentReport RunExperiment(const ExperimentConfig& config, int jobs);
// Reads the config file and runs it.
ExperimentReport RunExperimentFile(const std::string& path, int jobs);

}  // namespace wmlab

#endif  // WMLAB_EXPERIMENT_H_
