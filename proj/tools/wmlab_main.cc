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

// wmlab: command-line entry point. Data goes to stdout (or --out), messages
// to stderr. Exit status: 0 success, 1 usage error, 2 runtime error.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "wmlab/backdoor.h"
#include "wmlab/bridge.h"
#include "wmlab/distill.h"
#include "wmlab/eval.h"
#include "wmlab/experiment.h"
#include "wmlab/synth.h"
#include "wmlab/watermark.h"

namespace {

using namespace wmlab;
using ojson = nlohmann::ordered_json;

struct Globals {
  int jobs = 0;
  std::optional<std::uint64_t> seed;
  std::uint64_t Seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("WMLAB_SEED")) {
      try {
        std::size_t used = 0;
        const auto v = std::stoull(env, &used);
        if (used == std::string(env).size()) return v;
      } catch (const std::exception&) {
      }
      throw CLI::ValidationError("WMLAB_SEED", std::string("not an unsigned integer: ") + env);
    }
    return 0;
  }
  int Jobs() const { return jobs > 0 ? jobs : DefaultJobs(); }
};

struct WatermarkFlags {
  std::string method = "none";
  std::uint64_t key = 0;
  double gamma = 0.25;
  double delta = 2.0;
  std::optional<std::size_t> k;

  void Add(CLI::App* app, const char* method_flag, bool required) {
    auto* opt = app->add_option(method_flag, method, "none | kgw | aar")
                    ->check(CLI::IsMember({"none", "kgw", "aar"}));
    if (required) opt->required();
    app->add_option("--key", key, "watermark key");
    app->add_option("--gamma", gamma, "KGW green fraction")->check(CLI::Range(0.0, 1.0));
    app->add_option("--delta", delta, "KGW logit bias")->check(CLI::NonNegativeNumber);
    app->add_option("--k", k, "context width (default 1 for kgw, 2 for aar)");
  }
  WatermarkConfig Config() const {
    WatermarkConfig c;
    c.method = ParseWatermarkMethod(method);
    c.key = key;
    c.gamma = gamma;
    c.delta = delta;
    c.k = k;
    return c;
  }
};

struct ModelFlags {
  int order = 2;
  double alpha = 0.1;
  double lambda = 0.3;
  void Add(CLI::App* app, int default_order, double default_alpha) {
    order = default_order;
    alpha = default_alpha;
    app->add_option("--order", order, "n-gram order")->check(CLI::Range(1, kMaxOrder));
    app->add_option("--alpha", alpha, "additive smoothing")->check(CLI::NonNegativeNumber);
    app->add_option("--lambda", lambda, "backoff interpolation weight")->check(CLI::Range(0.0, 1.0));
  }
  Smoothing smoothing() const { return {alpha, lambda}; }
};

void WriteOut(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout << data;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << data;
  if (!out) throw DataError("write failed: " + path);
}

std::string JsonDoc(const ojson& j) { return j.dump(2) + "\n"; }

std::vector<TokenSequence> ReadPrompts(const std::string& path) {
  std::vector<TokenSequence> out;
  if (path.empty()) return out;
  for (const auto& d : ReadCorpus(path).docs) out.push_back(d.tokens);
  return out;
}

std::vector<DetectionReport> ReadReports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<DetectionReport> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(DetectionReport::FromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::string ReportsJsonl(const std::vector<DetectionReport>& reports) {
  std::string s;
  for (const auto& r : reports) s += r.ToJson().dump() + "\n";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  CLI::App app{"wmlab: watermark lab for n-gram language models"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--jobs", g.jobs, "worker threads (default: hardware concurrency)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "master seed (fallback: $WMLAB_SEED, then 0)");

  std::function<void()> action;

  // synth
  auto* synth = app.add_subcommand("synth", "sample a corpus from the toy language");
  SynthParams sp;
  std::size_t synth_docs = 0;
  std::string synth_out, synth_vocab_out;
  int synth_domain = -1;
  synth->add_option("--docs", synth_docs, "number of documents")->required();
  synth->add_option("--vocab-size", sp.vocab_size, "vocabulary size");
  synth->add_option("--successors", sp.successors, "followers per word");
  synth->add_option("--zipf", sp.zipf, "Zipf exponent");
  synth->add_option("--mean-length", sp.mean_length, "mean document length");
  synth->add_option("--domains", sp.domains, "number of token-disjoint domains");
  synth->add_option("--language-seed", sp.seed, "seed of the language itself");
  synth->add_option("--domain", synth_domain, "sample only this domain");
  synth->add_option("--out", synth_out, "corpus JSONL (default stdout)");
  synth->add_option("--vocab-out", synth_vocab_out, "write the vocabulary file here");
  synth->callback([&] {
    action = [&] {
      const SynthLanguage lang(sp);
      if (!synth_vocab_out.empty()) lang.vocab().Save(synth_vocab_out);
      WriteOut(synth_out, SerializeCorpus(lang.Sample(synth_docs, g.Seed(), synth_domain)));
    };
  });

  // train-lm
  auto* train = app.add_subcommand("train-lm", "train an n-gram model");
  std::string train_corpus, train_vocab, train_out;
  std::size_t train_v = 0;
  ModelFlags train_m;
  train_m.Add(train, 4, 0.01);
  train->add_option("--corpus", train_corpus, "training corpus JSONL")->required();
  auto* vocab_opt = train->add_option("--vocab", train_vocab, "vocabulary file");
  train->add_option("--vocab-size", train_v, "vocabulary size")->excludes(vocab_opt);
  train->add_option("--out", train_out, "model file (default stdout)");
  train->callback([&] {
    action = [&] {
      std::size_t v = train_v;
      if (!train_vocab.empty()) v = Vocabulary::Load(train_vocab).size();
      if (v == 0) throw CLI::ValidationError("train-lm", "need --vocab or --vocab-size");
      WriteOut(train_out,
               TrainNGram(ReadCorpus(train_corpus), train_m.order, train_m.smoothing(), v)
                   .Serialize());
    };
  });

  // generate
  auto* gen = app.add_subcommand("generate", "sample texts, optionally watermarked");
  std::string gen_model, gen_prompts, gen_out;
  std::size_t gen_n = 1;
  int gen_no_repeat = 0;
  GenParams gp;
  WatermarkFlags gen_wm;
  gen_wm.Add(gen, "--watermark", false);
  gen->add_option("--model", gen_model, "model file")->required();
  gen->add_option("--n", gen_n, "number of texts")->check(CLI::PositiveNumber);
  gen->add_option("--max-len", gp.max_len, "tokens per text")->check(CLI::PositiveNumber);
  gen->add_option("--temperature", gp.temperature, "sampling temperature")
      ->check(CLI::PositiveNumber);
  gen->add_flag("--stop-at-eos", gp.stop_at_eos, "end a text at EOS");
  gen->add_option("--prompts", gen_prompts, "corpus JSONL whose token lists are cycled as prompts");
  gen->add_option("--no-repeat", gen_no_repeat, "block repeated n-grams while generating")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--out", gen_out, "corpus JSONL (default stdout)");
  gen->callback([&] {
    action = [&] {
      const NGramModel model = NGramModel::Load(gen_model);
      const auto rule = gen_wm.Config().MakeRule();
      gp.seed = g.Seed();
      Corpus texts;
      if (gen_no_repeat > 0) {
        const NoRepeatRule nr(*rule, gen_no_repeat);
        texts = GenerateMany(model, ReadPrompts(gen_prompts), gen_n, gp, nr, g.Jobs());
      } else {
        texts = GenerateMany(model, ReadPrompts(gen_prompts), gen_n, gp, *rule, g.Jobs());
      }
      WriteOut(gen_out, SerializeCorpus(texts));
    };
  });

  // detect
  auto* det = app.add_subcommand("detect", "score texts for a watermark");
  std::string det_in, det_out;
  WatermarkFlags det_wm;
  det_wm.Add(det, "--method", true);
  det->add_option("--in", det_in, "corpus JSONL")->required();
  det->add_option("--out", det_out, "reports JSONL (default stdout)");
  det->callback([&] {
    action = [&] {
      const auto detector = det_wm.Config().MakeDetector();
      WriteOut(det_out, ReportsJsonl(DetectAll(*detector, ReadCorpus(det_in), g.Jobs())));
    };
  });

  // backdoor build | test
  auto* bd = app.add_subcommand("backdoor", "trigger/target backdoor watermark");
  bd->require_subcommand(1);
  std::string bd_vocab, bd_trigger = "@@@", bd_target = "I am llama";
  auto add_bd_common = [&](CLI::App* c) {
    c->add_option("--vocab", bd_vocab, "vocabulary file")->required();
    c->add_option("--trigger", bd_trigger, "trigger text");
    c->add_option("--target", bd_target, "target text");
  };
  auto make_spec = [&] {
    const Vocabulary vocab = Vocabulary::Load(bd_vocab);
    BackdoorSpec spec;
    spec.trigger = Tokenize(bd_trigger, vocab);
    spec.target = Tokenize(bd_target, vocab);
    return spec;
  };
  auto* bd_build = bd->add_subcommand("build", "mix poisoned documents into a corpus");
  std::string bdb_corpus, bdb_out, bdb_mode = "pt";
  std::size_t bdb_mix = 0;
  double bdb_rate = 0.0;
  add_bd_common(bd_build);
  bd_build->add_option("--corpus", bdb_corpus, "clean corpus JSONL")->required();
  bd_build->add_option("--mode", bdb_mode, "pt | it")->check(CLI::IsMember({"pt", "it"}));
  auto* mix_opt = bd_build->add_option("--mix-count", bdb_mix, "poisoned documents");
  bd_build->add_option("--rate", bdb_rate, "poisoned documents as a fraction of the corpus")
      ->excludes(mix_opt)
      ->check(CLI::Range(0.0, 1.0));
  bd_build->add_option("--out", bdb_out, "corpus JSONL (default stdout)");
  bd_build->callback([&] {
    action = [&] {
      BackdoorSpec spec = make_spec();
      const Corpus clean = ReadCorpus(bdb_corpus);
      spec.mode = ParseInsertionMode(bdb_mode);
      spec.seed = g.Seed();
      spec.mix_count = bdb_mix;
      if (bdb_rate > 0.0) {
        spec.mix_count = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(bdb_rate * static_cast<double>(clean.size()))));
      } else if (bdb_mix == 0) {
        spec.mix_count = 1;
      }
      WriteOut(bdb_out, SerializeCorpus(BuildBackdoorCorpus(clean, spec)));
    };
  });
  auto* bd_test = bd->add_subcommand("test", "measure the trigger rate and its p-value");
  std::string bdt_model, bdt_prompts, bdt_clean_model, bdt_out;
  std::size_t bdt_n = 200;
  double bdt_p0 = 0.01;
  int bdt_len = 16;
  add_bd_common(bd_test);
  bd_test->add_option("--model", bdt_model, "suspect model file")->required();
  bd_test->add_option("--n", bdt_n, "number of trigger prompts (when --prompts is absent)")
      ->check(CLI::PositiveNumber);
  bd_test->add_option("--prompts", bdt_prompts, "prompt corpus JSONL");
  auto* p0_opt = bd_test->add_option("--p0", bdt_p0, "accidental trigger probability");
  bd_test->add_option("--estimate-p0-with", bdt_clean_model,
                      "estimate p0 as (t+1)/(N+2) from target hits of this model on the "
                      "trigger-free prompts")
      ->excludes(p0_opt);
  bd_test->add_option("--max-len", bdt_len, "completion length")->check(CLI::PositiveNumber);
  bd_test->add_option("--out", bdt_out, "trial JSON (default stdout)");
  bd_test->callback([&] {
    action = [&] {
      BackdoorSpec spec = make_spec();
      std::vector<TokenSequence> prompts = ReadPrompts(bdt_prompts);
      if (prompts.empty()) prompts.assign(bdt_n, TokenSequence{});
      GenParams gp2;
      gp2.max_len = bdt_len;
      gp2.seed = g.Seed();
      double p0 = bdt_p0;
      ojson extra;
      if (!bdt_clean_model.empty()) {
        const TriggerTrial clean = MeasureTargetRate(NGramModel::Load(bdt_clean_model), prompts,
                                                     spec.target, gp2, g.Jobs());
        p0 = EstimateP0(clean);
        extra["N"] = clean.n;
        extra["t"] = clean.t;
      }
      if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("p0 must be in (0, 1)");
      const TriggerTrial trial =
          MeasureTriggerRate(NGramModel::Load(bdt_model), prompts, spec, gp2, g.Jobs());
      ojson j = TrialReport(trial, p0);
      j["band"] = ToString(BandOf(BackdoorPValue(trial, p0)));
      if (!extra.empty()) j["p0_estimate_from"] = extra;
      WriteOut(bdt_out, JsonDoc(j));
    };
  });

  // distill sample | logits
  auto* dist = app.add_subcommand("distill", "move a watermark into a student's parameters");
  dist->require_subcommand(1);
  std::string d_teacher, d_out, d_prompts, d_data_out, d_contexts;
  std::size_t d_samples = 1000, d_teacher_contexts = 0;
  int d_len = 200;
  ModelFlags d_m;
  WatermarkFlags d_wm;
  auto add_d_common = [&](CLI::App* c) {
    d_wm.Add(c, "--watermark", true);
    d_m.Add(c, 2, 0.01);
    c->add_option("--teacher", d_teacher, "teacher model file")->required();
    c->add_option("--out", d_out, "student model file (default stdout)");
    c->add_option("--max-len", d_len, "tokens per teacher sample")->check(CLI::PositiveNumber);
    c->add_option("--prompts", d_prompts, "prompt corpus JSONL for teacher samples");
  };
  auto teacher_samples = [&](const NGramModel& teacher, const StepRule& rule, std::size_t n) {
    SamplingDistillParams p;
    p.order = d_m.order;
    p.smoothing = d_m.smoothing();
    p.n_samples = n;
    p.gen.max_len = d_len;
    p.gen.stop_at_eos = false;
    p.gen.seed = g.Seed();
    p.prompts = ReadPrompts(d_prompts);
    p.jobs = g.Jobs();
    return DistillCorpus(teacher, rule, p);
  };
  auto* d_sample = dist->add_subcommand("sample", "train on watermarked teacher samples");
  add_d_common(d_sample);
  d_sample->add_option("--n-samples", d_samples, "teacher samples")->check(CLI::PositiveNumber);
  d_sample->add_option("--data-out", d_data_out, "also write the samples here");
  d_sample->callback([&] {
    action = [&] {
      const NGramModel teacher = NGramModel::Load(d_teacher);
      const auto rule = d_wm.Config().MakeRule();
      const Corpus data = teacher_samples(teacher, *rule, d_samples);
      if (!d_data_out.empty()) WriteOut(d_data_out, SerializeCorpus(data));
      WriteOut(d_out, TrainNGram(data, d_m.order, d_m.smoothing(), teacher.vocab_size()).Serialize());
    };
  });
  auto* d_logits = dist->add_subcommand("logits", "fit the teacher's watermarked distributions");
  add_d_common(d_logits);
  auto* ctx_opt = d_logits->add_option("--contexts", d_contexts, "external context corpus JSONL");
  d_logits->add_option("--teacher-contexts", d_teacher_contexts,
                       "use this many watermarked teacher samples as contexts instead")
      ->excludes(ctx_opt);
  d_logits->callback([&] {
    action = [&] {
      if (d_contexts.empty() && d_teacher_contexts == 0) {
        throw CLI::ValidationError("distill logits", "need --contexts or --teacher-contexts");
      }
      const NGramModel teacher = NGramModel::Load(d_teacher);
      const auto rule = d_wm.Config().MakeRule();
      const Corpus ctx = d_contexts.empty()
                             ? teacher_samples(teacher, *rule, d_teacher_contexts)
                             : ReadCorpus(d_contexts);
      WriteOut(d_out,
               DistillLogits(teacher, *rule, ctx, d_m.order, d_m.smoothing(), g.Jobs()).Serialize());
    };
  });

  // Shared evaluation flags for erode / retain.
  std::size_t ev_n = 200;
  int ev_len = 200;
  std::string ev_prompts;
  auto add_eval = [&](CLI::App* c) {
    c->add_option("--n-texts", ev_n, "texts per evaluation")->check(CLI::PositiveNumber);
    c->add_option("--max-len", ev_len, "tokens per text")->check(CLI::PositiveNumber);
  };
  auto eval_texts = [&](bool stop_at_eos) {
    EvalTexts ev;
    ev.prompts = ReadPrompts(ev_prompts);
    ev.n_texts = ev_n;
    ev.gen.max_len = ev_len;
    ev.gen.stop_at_eos = stop_at_eos;
    ev.gen.seed = g.Seed();
    ev.jobs = g.Jobs();
    return ev;
  };

  // erode
  auto* erode = app.add_subcommand("erode", "watermark retention under continued training");
  std::string er_student, er_clean, er_out;
  std::vector<double> er_steps;
  bool er_relative = false;
  WatermarkFlags er_wm;
  er_wm.Add(erode, "--method", true);
  add_eval(erode);
  erode->add_option("--prompts", ev_prompts, "prompt corpus JSONL");
  erode->add_option("--student", er_student, "watermarked model file")->required();
  erode->add_option("--clean", er_clean, "clean corpus JSONL")->required();
  erode->add_option("--steps", er_steps, "cumulative clean-count weights")
      ->required()
      ->delimiter(',');
  erode->add_flag("--relative", er_relative,
                  "steps are multiples of the student's total count mass");
  erode->add_option("--out", er_out, "curve JSON (default stdout)");
  erode->callback([&] {
    action = [&] {
      const NGramModel student = NGramModel::Load(er_student);
      const Corpus clean = ReadCorpus(er_clean);
      std::vector<double> steps = er_steps;
      if (er_relative) {
        const double clean_mass =
            static_cast<double>(clean.TokenCount() + clean.size());
        for (double& s : steps) s *= student.TotalMass() / clean_mass;
      }
      const auto det = er_wm.Config().MakeDetector();
      WriteOut(er_out, JsonDoc(CurveToJson(
                           RetentionCurve(student, clean, steps, *det, eval_texts(false)))));
    };
  });

  // retain
  auto* retain = app.add_subcommand("retain", "cross-domain watermark retention");
  std::string rt_student, rt_clean_a, rt_pa, rt_pb, rt_out;
  double rt_weight = 1.0;
  WatermarkFlags rt_wm;
  rt_wm.Add(retain, "--method", true);
  add_eval(retain);
  retain->add_option("--student", rt_student, "watermarked model file")->required();
  retain->add_option("--clean-a", rt_clean_a, "domain A fine-tuning corpus JSONL")->required();
  retain->add_option("--weight", rt_weight, "weight of the domain A counts")
      ->check(CLI::PositiveNumber);
  retain->add_option("--prompts-a", rt_pa, "domain A prompt corpus JSONL")->required();
  retain->add_option("--prompts-b", rt_pb, "domain B prompt corpus JSONL")->required();
  retain->add_option("--out", rt_out, "result JSON (default stdout)");
  retain->callback([&] {
    action = [&] {
      const auto det = rt_wm.Config().MakeDetector();
      const auto res = DomainRetention(NGramModel::Load(rt_student), ReadCorpus(rt_clean_a),
                                       rt_weight, *det, ReadPrompts(rt_pa), ReadPrompts(rt_pb),
                                       eval_texts(true));
      ojson j = res.ToJson();
      j["B_unchanged"] = res.b_before == res.b_after;
      WriteOut(rt_out, JsonDoc(j));
    };
  });

  // eval quality | accuracy | ip
  auto* ev = app.add_subcommand("eval", "quality metrics, detection accuracy, IP test");
  ev->require_subcommand(1);
  auto* ev_q = ev->add_subcommand("quality", "perplexity and n-gram repetition");
  std::string q_scorer, q_in, q_out;
  int q_no_repeat = 0, q_n = 3;
  ev_q->add_option("--scorer", q_scorer, "scoring model file")->required();
  ev_q->add_option("--in", q_in, "corpus JSONL")->required();
  ev_q->add_option("--no-repeat", q_no_repeat,
                   "leave out tokens completing an n-gram seen earlier in the text")
      ->check(CLI::NonNegativeNumber);
  ev_q->add_option("--rep-n", q_n, "n for Seq-Rep-n")->check(CLI::PositiveNumber);
  ev_q->add_option("--out", q_out, "JSON (default stdout)");
  ev_q->callback([&] {
    action = [&] {
      const Corpus texts = ReadCorpus(q_in);
      const NGramModel scorer = NGramModel::Load(q_scorer);
      ojson j;
      j["texts"] = texts.size();
      j["ppl"] = Perplexity(scorer, texts,
                            q_no_repeat > 0 ? std::optional<int>(q_no_repeat) : std::nullopt);
      j["seq_rep_n"] = q_n;
      j["seq_rep"] = SeqRepN(texts, q_n);
      WriteOut(q_out, JsonDoc(j));
    };
  });
  auto* ev_a = ev->add_subcommand("accuracy", "accuracy, TPR and FPR at a threshold");
  std::string a_wm, a_human, a_out;
  double a_alpha = 0.05;
  ev_a->add_option("--wm", a_wm, "reports JSONL for watermarked texts")->required();
  ev_a->add_option("--human", a_human, "reports JSONL for human texts")->required();
  ev_a->add_option("--alpha", a_alpha, "threshold")->check(CLI::Range(0.0, 1.0));
  ev_a->add_option("--out", a_out, "JSON (default stdout)");
  ev_a->callback([&] {
    action = [&] {
      const auto r = DetectionAccuracy(ReadReports(a_wm), ReadReports(a_human), a_alpha);
      ojson j;
      j["alpha"] = a_alpha;
      j["accuracy"] = r.accuracy;
      j["tpr"] = r.tpr;
      j["fpr"] = r.fpr;
      WriteOut(a_out, JsonDoc(j));
    };
  });
  auto* ev_ip = ev->add_subcommand("ip", "accuracy-based IP infringement test");
  std::string ip_model, ip_human, ip_out;
  double ip_alpha = 0.05, ip_boundary = 0.05;
  WatermarkFlags ip_wm;
  ip_wm.Add(ev_ip, "--method", true);
  ev_ip->add_option("--model-texts", ip_model, "suspect model texts JSONL")->required();
  ev_ip->add_option("--human-texts", ip_human, "human texts JSONL")->required();
  ev_ip->add_option("--alpha", ip_alpha, "per-text threshold")->check(CLI::Range(0.0, 1.0));
  ev_ip->add_option("--boundary", ip_boundary, "accuracy margin over 0.5")
      ->check(CLI::Range(0.0, 0.5));
  ev_ip->add_option("--out", ip_out, "JSON (default stdout)");
  ev_ip->callback([&] {
    action = [&] {
      const auto det = ip_wm.Config().MakeDetector();
      const auto r = IpInfringementTest(*det, ReadCorpus(ip_model), ReadCorpus(ip_human),
                                        ip_alpha, ip_boundary, g.Jobs());
      ojson j = r.ToJson();
      j["band"] = ToString(BandOf(r.log10_p));
      WriteOut(ip_out, JsonDoc(j));
    };
  });

  // experiment
  auto* ex = app.add_subcommand("experiment", "run a configured pipeline");
  std::string ex_cfg, ex_out, ex_md;
  ex->add_option("config", ex_cfg, "config JSON")->required();
  ex->add_option("--out", ex_out, "report JSON (default stdout)");
  ex->add_option("--markdown", ex_md, "also write the Markdown table here");
  ex->callback([&] {
    action = [&] {
      const ExperimentReport r = RunExperimentFile(ex_cfg, g.Jobs());
      WriteOut(ex_out, JsonDoc(r.json));
      if (!ex_md.empty()) WriteOut(ex_md, r.markdown);
    };
  });

  // bridge-serve
  auto* bs = app.add_subcommand("bridge-serve", "serve a model over the bridge protocol");
  std::string bs_model;
  int bs_port = -1;
  std::size_t bs_max = 0;
  bs->add_option("model", bs_model, "model file")->required();
  bs->add_option("--port", bs_port, "TCP port on 127.0.0.1 (0 = any); default stdin/stdout")
      ->check(CLI::Range(0, 65535));
  bs->add_option("--max-connections", bs_max, "exit after this many TCP connections");
  bs->callback([&] {
    action = [&] {
      const NGramModel model = NGramModel::Load(bs_model);
      if (model.vocab_size() > kMaxBridgeVocab) {
        throw std::invalid_argument("vocabulary too large for the bridge");
      }
      if (bs_port < 0) {
        LineChannel channel(STDIN_FILENO, STDOUT_FILENO);
        ServeModel(model, model.order(), channel);
        return;
      }
      ServeTcp(model, model.order(), bs_port,
               [](int port) { std::cerr << "listening on 127.0.0.1:" << port << std::endl; },
               bs_max > 0 ? std::optional<std::size_t>(bs_max) : std::nullopt);
    };
  });

  try {
    app.parse(argc, argv);
    if (g.jobs > 0) SetDefaultJobs(g.jobs);
    g.Seed();
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    // Usage of the innermost subcommand that was reached.
    const CLI::App* sub = &app;
    while (!sub->get_subcommands().empty()) sub = sub->get_subcommands().front();
    std::cerr << "error: " << e.what() << "\n\n" << sub->help();
    return 1;
  }
  try {
    if (action) action();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
