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

#include "wmlab/experiment.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace wmlab {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json Small(const std::string& pipeline) {
  return {{"pipeline", pipeline},
          {"synth", {{"vocab_size", 200}}},
          {"synth_docs", 1000},
          {"teacher", {{"order", 2}}},
          {"N", 20},
          {"n_samples", 200},
          {"max_len", 40},
          {"steps", {1, 100}}};
}

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("wmlab_experiment_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(ExperimentConfigTest, Defaults) {
  const auto q = ExperimentConfig::FromJson({{"pipeline", "quality"}});
  EXPECT_EQ(q.teacher.order, 4);
  EXPECT_EQ(q.student.order, 2);
  EXPECT_EQ(q.watermark.method, WatermarkMethod::kKgw);
  EXPECT_EQ(q.watermark.key, 42u);
  EXPECT_EQ(q.n, 200u);
  EXPECT_EQ(q.seeds, std::vector<std::uint64_t>{1});

  const auto b = ExperimentConfig::FromJson({{"pipeline", "backdoor-ip"}});
  EXPECT_EQ(b.student.order, 4);
  EXPECT_EQ(b.p0, 0.01);
  EXPECT_EQ(b.insertion, InsertionMode::kPretrain);

  const auto r = ExperimentConfig::FromJson({{"pipeline", "retention"}});
  EXPECT_EQ(r.teacher.order, 2);
  EXPECT_EQ(r.teacher.smoothing.alpha, 0.0);
  EXPECT_EQ(r.student.smoothing.lambda, 0.0);
  EXPECT_EQ(r.synth.domains, 2);
  const auto r3 = ExperimentConfig::FromJson(
      {{"pipeline", "retention"}, {"synth", {{"vocab_size", 300}, {"domains", 3}}}});
  EXPECT_EQ(r3.synth.domains, 3);
  EXPECT_EQ(r3.synth.vocab_size, 300u);

  const auto w = ExperimentConfig::FromJson(
      {{"pipeline", "erosion"}, {"watermark", {{"method", "aar"}}}});
  EXPECT_EQ(w.watermark.method, WatermarkMethod::kAar);
  EXPECT_EQ(w.watermark.key, 42u);
  const auto k = ExperimentConfig::FromJson({{"pipeline", "erosion"}, {"watermark", {{"key", 7}}}});
  EXPECT_EQ(k.watermark.method, WatermarkMethod::kKgw);
  EXPECT_EQ(k.watermark.key, 7u);
}

TEST(ExperimentConfigTest, Errors) {
  const auto bad = [](json patch) {
    json j = Small("distill-ip");
    j.merge_patch(patch);
    return j;
  };
  EXPECT_THROW(ExperimentConfig::FromJson(json::array()), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson({{"N", 5}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson({{"pipeline", "nope"}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"bogus", 1}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"N", "many"}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"N", 5}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"seeds", json::array()}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"alpha", 1.5}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"boundary", 0.5}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"max_len", 0}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"steps", {3, 2}}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"steps", {0, 2}}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"modes", {"distilled"}}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"logits_contexts", "both"}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"teacher", {{"order", 0}}}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"teacher", {{"lambda", 2}}}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"student", {{"depth", 2}}}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"watermark", {{"method", "none"}}}})),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"watermark", {{"gamma", 1.0}}}})),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"watermark", "kgw"}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"backdoor", {{"p0", 0.5}, {"x", 1}}}})),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"backdoor", {{"poison_rate", 0}}}})),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"backdoor", {{"mode", "ft"}}}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(bad({{"corpus", "c.jsonl"}})), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(
                   {{"pipeline", "retention"}, {"student", {{"order", 4}}}, {"prompt_len", 2}}),
               ConfigError);
}

TEST(ExperimentConfigTest, PathsResolveAgainstBaseDir) {
  const auto c = ExperimentConfig::FromJson(
      {{"pipeline", "quality"}, {"model", "m.json"}, {"vocab", "/abs/v.txt"}}, "/data/run");
  EXPECT_EQ(*c.model, "/data/run/m.json");
  EXPECT_EQ(*c.vocab, "/abs/v.txt");
}

TEST(ExperimentConfigTest, ToJsonRoundTrip) {
  const auto c = ExperimentConfig::FromJson(Small("erosion"));
  const auto again = ExperimentConfig::FromJson(json::parse(c.ToJson().dump()));
  EXPECT_EQ(again.ToJson().dump(), c.ToJson().dump());
}

class PipelineTest : public ::testing::TestWithParam<std::string> {};

TEST_P(PipelineTest, RunsAndIsIndependentOfJobs) {
  const auto cfg = ExperimentConfig::FromJson(Small(GetParam()));
  const auto a = RunExperiment(cfg, 1);
  const auto b = RunExperiment(cfg, 3);
  EXPECT_EQ(a.json.dump(), b.json.dump());
  EXPECT_EQ(a.markdown, b.markdown);
  EXPECT_EQ(a.json["pipeline"], GetParam());
  EXPECT_TRUE(a.json.contains("config"));
  ASSERT_TRUE(a.json.contains("rows"));
  EXPECT_FALSE(a.json["rows"].empty());
  EXPECT_EQ(a.markdown.rfind("## ", 0), 0u);
  EXPECT_NE(a.markdown.find("| --- |"), std::string::npos);
  EXPECT_NE(a.markdown.find("significant p < 1e-3"), std::string::npos);
}

INSTANTIATE_TEST_SUITE_P(AllPipelines, PipelineTest,
                         ::testing::Values("backdoor-ip", "distill-ip", "distill-text",
                                           "erosion", "retention", "quality"),
                         [](const auto& info) {
                           std::string s = info.param;
                           for (char& ch : s) {
                             if (ch == '-') ch = '_';
                           }
                           return s;
                         });

TEST(PipelineShapeTest, ErosionCurveAndSeeds) {
  json j = Small("erosion");
  j["seeds"] = {1, 2};
  const auto r = RunExperiment(ExperimentConfig::FromJson(j), 2);
  ASSERT_EQ(r.json["rows"].size(), 2u);
  for (const auto& row : r.json["rows"]) {
    const auto& curve = row["curve"];
    ASSERT_EQ(curve.size(), 3u);
    EXPECT_EQ(curve[0]["step"], 0.0);
    EXPECT_EQ(curve[2]["relative_mass"], 100.0);
    EXPECT_TRUE(row.contains("spearman"));
    EXPECT_TRUE(curve[1].contains("band"));
  }
  EXPECT_NE(r.json["rows"][0]["curve"][0].dump(), r.json["rows"][1]["curve"][0].dump());
}

TEST(PipelineShapeTest, RetentionLeavesDomainBUnchanged) {
  const auto r = RunExperiment(ExperimentConfig::FromJson(Small("retention")), 2);
  const auto& row = r.json["rows"][0];
  EXPECT_EQ(row["b_unchanged"], true);
  EXPECT_EQ(row["result"]["B_before"].dump(), row["result"]["B_after"].dump());
}

TEST(PipelineShapeTest, DistillTextPoolsPerMode) {
  json j = Small("distill-text");
  j["modes"] = {"sampling", "logits"};
  j["seeds"] = {1, 2};
  const auto r = RunExperiment(ExperimentConfig::FromJson(j), 2);
  EXPECT_EQ(r.json["rows"].size(), 4u);
  ASSERT_EQ(r.json["pooled"].size(), 2u);
  EXPECT_EQ(r.json["pooled"][0]["mode"], "sampling");
  EXPECT_EQ(r.json["pooled"][1]["mode"], "logits");
}

TEST(ExperimentFileTest, CorpusAndVocabFromFiles) {
  const fs::path dir = TempDir("files");
  const SynthLanguage lang(SynthParams{.vocab_size = 200});
  WriteCorpus(lang.Sample(800, 5), (dir / "clean.jsonl").string());
  lang.vocab().Save((dir / "vocab.txt").string());
  json j = Small("distill-ip");
  j.erase("synth");
  j.erase("synth_docs");
  j["corpus"] = "clean.jsonl";
  j["vocab"] = "vocab.txt";
  {
    std::ofstream out(dir / "config.json");
    out << j.dump(2);
  }
  const auto a = RunExperimentFile((dir / "config.json").string(), 1);
  const auto b = RunExperimentFile((dir / "config.json").string(), 2);
  EXPECT_EQ(a.json.dump(), b.json.dump());
  EXPECT_EQ(a.json["config"]["corpus"], "clean.jsonl");

  EXPECT_THROW(RunExperimentFile((dir / "missing.json").string(), 1), DataError);
  {
    std::ofstream out(dir / "broken.json");
    out << "{\"pipeline\": ";
  }
  EXPECT_THROW(RunExperimentFile((dir / "broken.json").string(), 1), ConfigError);
  j["corpus"] = "absent.jsonl";
  {
    std::ofstream out(dir / "absent.json");
    out << j.dump();
  }
  EXPECT_THROW(RunExperimentFile((dir / "absent.json").string(), 1), std::exception);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace wmlab
