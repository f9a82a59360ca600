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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "wmlab/distill.h"
#include "wmlab/eval.h"
#include "wmlab/hash.h"
#include "wmlab/summary.h"

namespace wmlab {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// Sub-seed slots derived from each experiment seed.
enum Slot : std::uint64_t {
  kSlotDistill = 1,
  kSlotEval = 2,
  kSlotHuman = 3,
  kSlotContexts = 4,
  kSlotPromptsA = 5,
  kSlotPromptsB = 6,
  kSlotBackdoor = 7,
};

// Seeds are hashed before the slot is mixed in; with a plain XOR, seed 1
// slot 2 and seed 2 slot 1 would share a stream.
std::uint64_t SlotSeed(std::uint64_t seed, Slot slot) {
  return DeriveSeed(Splitmix64(seed), slot);
}

const std::set<std::string> kKnownKeys = {
    "pipeline", "model",     "corpus",         "vocab",      "synth",
    "synth_docs", "teacher", "student",        "watermark",  "seeds",
    "N",        "alpha",     "boundary",       "max_len",    "n_samples",
    "modes",    "logits_contexts", "steps",    "weight",     "prompt_len",
    "backdoor"};
const std::set<std::string> kBackdoorKeys = {
    "trigger", "target", "p0", "poison_rate", "mode", "completion_len", "merge_clean"};

std::string Resolve(const std::string& base, const std::string& path) {
  if (base.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).string();
}

ModelSpec ParseModelSpec(const nlohmann::json& j, ModelSpec spec, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k != "order" && k != "alpha" && k != "lambda") {
      throw ConfigError(std::string(what) + ": unknown key \"" + k + "\"");
    }
  }
  spec.order = j.value("order", spec.order);
  spec.smoothing.alpha = j.value("alpha", spec.smoothing.alpha);
  spec.smoothing.lambda = j.value("lambda", spec.smoothing.lambda);
  if (spec.order < 1 || spec.order > kMaxOrder) {
    throw ConfigError(std::string(what) + ".order must be in [1, 8]");
  }
  if (!(spec.smoothing.alpha >= 0.0) || !(spec.smoothing.lambda >= 0.0) ||
      !(spec.smoothing.lambda <= 1.0)) {
    throw ConfigError(std::string(what) + ": need alpha >= 0 and lambda in [0, 1]");
  }
  return spec;
}

ojson ModelSpecJson(const ModelSpec& s) {
  ojson j;
  j["order"] = s.order;
  j["alpha"] = s.smoothing.alpha;
  j["lambda"] = s.smoothing.lambda;
  return j;
}

std::string Fmt(double x, const char* f = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, x);
  return buf;
}

std::string BandName(double log10_p) { return ToString(BandOf(log10_p)); }

double CorpusMass(const Corpus& c) {
  double m = 0.0;
  for (const auto& d : c.docs) m += static_cast<double>(d.prefix.size() + d.tokens.size() + 1);
  return m;
}

double FractionBelow(const std::vector<double>& v, double log10_alpha) {
  std::size_t k = 0;
  for (double x : v) k += x < log10_alpha;
  return static_cast<double>(k) / static_cast<double>(v.size());
}

class Markdown {
 public:
  explicit Markdown(std::vector<std::string> header) : header_(std::move(header)) {}
  void Row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
  std::string Render(const std::string& title) const {
    std::ostringstream out;
    out << "## " << title << "\n\n|";
    for (const auto& h : header_) out << ' ' << h << " |";
    out << "\n|";
    for (std::size_t i = 0; i < header_.size(); ++i) out << " --- |";
    out << '\n';
    for (const auto& r : rows_) {
      out << '|';
      for (const auto& c : r) out << ' ' << c << " |";
      out << '\n';
    }
    return out.str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Everything a pipeline needs that does not depend on the seed.
class Setup {
 public:
  Setup(const ExperimentConfig& cfg, int jobs) : cfg_(cfg), jobs_(jobs) {
    if (cfg.corpus) {
      clean_ = ReadCorpus(*cfg.corpus);
      if (clean_.empty()) throw DataError("corpus is empty: " + *cfg.corpus);
    } else {
      lang_.emplace(cfg.synth);
      clean_ = lang_->Sample(cfg.synth_docs, cfg.synth.seed);
    }
    if (cfg.vocab) {
      vocab_ = Vocabulary::Load(*cfg.vocab);
    } else if (lang_) {
      vocab_ = lang_->vocab();
    }
    if (cfg.model) {
      teacher_.emplace(NGramModel::Load(*cfg.model));
    } else {
      const std::size_t v = vocab_ ? vocab_->size() : 0;
      if (v == 0) throw ConfigError("a corpus without a model needs \"vocab\"");
      teacher_.emplace(TrainNGram(clean_, cfg.teacher.order, cfg.teacher.smoothing, v));
    }
    if (vocab_ && vocab_->size() != teacher_->vocab_size()) {
      throw DataError("vocabulary size does not match the model");
    }
    clean_.Validate(teacher_->vocab_size());
  }

  const Corpus& clean() const { return clean_; }
  const NGramModel& teacher() const { return *teacher_; }
  std::size_t vocab_size() const { return teacher_->vocab_size(); }
  const Vocabulary& vocab() const {
    if (!vocab_) throw ConfigError("this pipeline needs \"vocab\"");
    return *vocab_;
  }
  int jobs() const { return jobs_; }

  // n documents not used for training when the language is synthetic;
  // otherwise n documents drawn from the corpus without replacement.
  Corpus HumanTexts(std::size_t n, std::uint64_t seed,
                    const std::optional<std::string>& tag = std::nullopt,
                    std::size_t min_len = 0) const {
    std::vector<const Document*> pool;
    Corpus sampled;
    if (lang_) {
      const int domain = tag ? std::stoi(tag->substr(1)) : -1;
      // Oversample so that min_len filtering still leaves n documents.
      std::size_t want = n;
      while (true) {
        sampled = lang_->Sample(want, seed, domain);
        pool.clear();
        for (const auto& d : sampled.docs) {
          if (d.tokens.size() >= min_len) pool.push_back(&d);
        }
        if (pool.size() >= n) break;
        want *= 2;
      }
    } else {
      for (const auto& d : clean_.docs) {
        if ((!tag || d.tag == tag) && d.tokens.size() >= min_len) pool.push_back(&d);
      }
      if (pool.size() < n) throw DataError("corpus has too few documents for N");
      Rng rng(seed);
      for (std::size_t i = 0; i < n; ++i) {
        std::swap(pool[i], pool[i + rng.NextBelow(pool.size() - i)]);
      }
    }
    Corpus out;
    for (std::size_t i = 0; i < n; ++i) out.docs.push_back(*pool[i]);
    return out;
  }

  // Leading `len` tokens of n held-out documents with at least len tokens.
  std::vector<TokenSequence> Prompts(std::size_t n, std::size_t len, std::uint64_t seed,
                                     const std::optional<std::string>& tag = std::nullopt) const {
    const Corpus docs = HumanTexts(n, seed, tag, len);
    std::vector<TokenSequence> out;
    for (const auto& d : docs.docs) out.emplace_back(d.tokens.begin(), d.tokens.begin() + len);
    return out;
  }

  std::vector<std::string> Tags() const {
    std::set<std::string> tags;
    for (const auto& d : clean_.docs) {
      if (d.tag) tags.insert(*d.tag);
    }
    return {tags.begin(), tags.end()};
  }

 private:
  const ExperimentConfig& cfg_;
  int jobs_;
  std::optional<SynthLanguage> lang_;
  std::optional<Vocabulary> vocab_;
  Corpus clean_;
  std::optional<NGramModel> teacher_;
};

GenParams TextGen(const ExperimentConfig& cfg, std::uint64_t seed) {
  GenParams g;
  g.max_len = cfg.max_len;
  g.stop_at_eos = false;
  g.seed = seed;
  return g;
}

// Generated texts continue held-out prompts; the prompt is context only.
std::vector<TokenSequence> EvalPrompts(const Setup& s, const ExperimentConfig& cfg,
                                       std::uint64_t seed) {
  return s.Prompts(cfg.n, cfg.prompt_len, SlotSeed(seed, kSlotPromptsA));
}

EvalTexts EvalSetup(const Setup& s, const ExperimentConfig& cfg, std::uint64_t seed) {
  EvalTexts ev;
  ev.prompts = EvalPrompts(s, cfg, seed);
  ev.n_texts = cfg.n;
  ev.gen = TextGen(cfg, SlotSeed(seed, kSlotEval));
  ev.jobs = s.jobs();
  return ev;
}

Corpus WatermarkedSamples(const Setup& s, const ExperimentConfig& cfg,
                          const StepRule& rule, std::uint64_t seed) {
  SamplingDistillParams p;
  p.order = cfg.student.order;
  p.smoothing = cfg.student.smoothing;
  p.n_samples = cfg.n_samples;
  p.gen = TextGen(cfg, SlotSeed(seed, kSlotDistill));
  p.prompts = s.Prompts(cfg.n_samples, cfg.prompt_len, SlotSeed(seed, kSlotContexts));
  p.jobs = s.jobs();
  return DistillCorpus(s.teacher(), rule, p);
}

NGramModel Distill(const Setup& s, const ExperimentConfig& cfg, const StepRule& rule,
                   DistillMode mode, std::uint64_t seed, const Corpus& samples) {
  if (mode == DistillMode::kSampling) {
    return TrainNGram(samples, cfg.student.order, cfg.student.smoothing, s.vocab_size());
  }
  if (cfg.logits_contexts == "teacher") {
    return DistillLogits(s.teacher(), rule, samples, cfg.student.order,
                         cfg.student.smoothing, s.jobs());
  }
  return DistillLogits(s.teacher(), rule,
                       s.HumanTexts(cfg.n_samples, SlotSeed(seed, kSlotBackdoor)),
                       cfg.student.order, cfg.student.smoothing, s.jobs());
}

std::vector<double> TextPValues(const Setup& s, const ExperimentConfig& cfg,
                                const LanguageModel& model, const Detector& det,
                                std::uint64_t seed) {
  return DetectGenerated(model, det, EvalSetup(s, cfg, seed));
}

ojson IpJson(const IpTestResult& r) {
  ojson j = r.ToJson();
  j["band"] = BandName(r.log10_p);
  return j;
}

ExperimentReport RunBackdoorIp(const ExperimentConfig& cfg, const Setup& s) {
  BackdoorSpec spec;
  spec.trigger = Tokenize(cfg.trigger, s.vocab());
  spec.target = Tokenize(cfg.target, s.vocab());
  spec.p0 = cfg.p0;
  spec.mode = cfg.insertion;
  spec.mix_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.poison_rate * static_cast<double>(s.clean().size()))));
  spec.Validate();
  const NGramModel clean_student =
      TrainNGram(s.clean(), cfg.student.order, cfg.student.smoothing, s.vocab_size());
  const std::vector<TokenSequence> prompts(cfg.n);
  GenParams gen;
  gen.max_len = cfg.completion_len;

  ojson rows = ojson::array();
  Markdown md({"seed", "poisoned docs", "N", "t", "log10_p", "band", "t after merge",
               "log10_p after merge", "band after merge", "clean t"});
  for (std::uint64_t seed : cfg.seeds) {
    spec.seed = SlotSeed(seed, kSlotBackdoor);
    const NGramModel student =
        TrainNGram(BuildBackdoorCorpus(s.clean(), spec), cfg.student.order,
                   cfg.student.smoothing, s.vocab_size());
    gen.seed = SlotSeed(seed, kSlotEval);
    const TriggerTrial trial = MeasureTriggerRate(student, prompts, spec, gen, s.jobs());
    const TriggerTrial control = MeasureTriggerRate(clean_student, prompts, spec, gen, s.jobs());
    ojson row;
    row["seed"] = seed;
    row["poisoned_docs"] = spec.mix_count;
    row["trial"] = TrialReport(trial, spec.p0);
    row["trial"]["band"] = BandName(BackdoorPValue(trial, spec.p0));
    row["clean_model"] = TrialReport(control, spec.p0);
    std::vector<std::string> cells = {
        std::to_string(seed), std::to_string(spec.mix_count), std::to_string(trial.n),
        std::to_string(trial.t), Fmt(BackdoorPValue(trial, spec.p0), "%.2f"),
        BandName(BackdoorPValue(trial, spec.p0))};
    if (cfg.merge_clean) {
      const NGramModel merged = MergeCounts(student, s.clean(), 1.0);
      const TriggerTrial after = MeasureTriggerRate(merged, prompts, spec, gen, s.jobs());
      const double lp = BackdoorPValue(after, spec.p0);
      row["after_merge"] = TrialReport(after, spec.p0);
      row["after_merge"]["band"] = BandName(lp);
      cells.insert(cells.end(), {std::to_string(after.t), Fmt(lp, "%.2f"), BandName(lp)});
    } else {
      cells.insert(cells.end(), {"-", "-", "-"});
    }
    cells.push_back(std::to_string(control.t));
    md.Row(std::move(cells));
    rows.push_back(std::move(row));
  }
  ExperimentReport r;
  r.json["rows"] = std::move(rows);
  r.markdown = md.Render("backdoor-ip");
  return r;
}

ExperimentReport RunDistillIp(const ExperimentConfig& cfg, const Setup& s) {
  const auto rule = cfg.watermark.MakeRule();
  const auto det = cfg.watermark.MakeDetector();
  const NGramModel clean_student =
      TrainNGram(s.clean(), cfg.student.order, cfg.student.smoothing, s.vocab_size());
  ojson rows = ojson::array();
  Markdown md({"seed", "model", "accuracy", "z", "log10_p", "band", "verdict"});
  for (std::uint64_t seed : cfg.seeds) {
    const Corpus samples = WatermarkedSamples(s, cfg, *rule, seed);
    const Corpus human = s.HumanTexts(cfg.n, SlotSeed(seed, kSlotHuman));
    auto texts = [&](const LanguageModel& m) {
      return GenerateMany(m, EvalPrompts(s, cfg, seed), cfg.n,
                          TextGen(cfg, SlotSeed(seed, kSlotEval)), PlainRule(), s.jobs());
    };
    auto add = [&](const std::string& name, const IpTestResult& ip) {
      ojson row;
      row["seed"] = seed;
      row["model"] = name;
      row["ip"] = IpJson(ip);
      md.Row({std::to_string(seed), name, Fmt(ip.accuracy.accuracy), Fmt(ip.z, "%.2f"),
              Fmt(ip.log10_p, "%.2f"), BandName(ip.log10_p),
              ip.infringing ? "watermarked" : "not-watermarked"});
      rows.push_back(std::move(row));
    };
    for (DistillMode mode : cfg.modes) {
      const NGramModel student = Distill(s, cfg, *rule, mode, seed, samples);
      add(ToString(mode), IpInfringementTest(*det, texts(student), human, cfg.alpha,
                                             cfg.boundary, s.jobs()));
    }
    add("clean", IpInfringementTest(*det, texts(clean_student), human, cfg.alpha,
                                    cfg.boundary, s.jobs()));
  }
  ExperimentReport r;
  r.json["rows"] = std::move(rows);
  r.markdown = md.Render("distill-ip");
  return r;
}

ExperimentReport RunDistillText(const ExperimentConfig& cfg, const Setup& s) {
  const auto rule = cfg.watermark.MakeRule();
  const auto det = cfg.watermark.MakeDetector();
  const double log10_alpha = std::log10(cfg.alpha);
  ojson rows = ojson::array();
  Markdown md({"seed", "mode", "median log10_p", "IQR", "detected", "band"});
  std::vector<std::vector<double>> pooled(cfg.modes.size());
  for (std::uint64_t seed : cfg.seeds) {
    const Corpus samples = WatermarkedSamples(s, cfg, *rule, seed);
    for (std::size_t m = 0; m < cfg.modes.size(); ++m) {
      const NGramModel student = Distill(s, cfg, *rule, cfg.modes[m], seed, samples);
      const auto p = TextPValues(s, cfg, student, *det, seed);
      pooled[m].insert(pooled[m].end(), p.begin(), p.end());
      ojson row;
      row["seed"] = seed;
      row["mode"] = ToString(cfg.modes[m]);
      row["median_log10_p"] = Median(p);
      row["iqr"] = Iqr(p);
      row["detected_fraction"] = FractionBelow(p, log10_alpha);
      row["band"] = BandName(Median(p));
      md.Row({std::to_string(seed), ToString(cfg.modes[m]), Fmt(Median(p), "%.2f"),
              Fmt(Iqr(p), "%.2f"), Fmt(FractionBelow(p, log10_alpha)), BandName(Median(p))});
      rows.push_back(std::move(row));
    }
  }
  ojson summary = ojson::array();
  for (std::size_t m = 0; m < cfg.modes.size(); ++m) {
    ojson e;
    e["mode"] = ToString(cfg.modes[m]);
    e["median_log10_p"] = Median(pooled[m]);
    e["detected_fraction"] = FractionBelow(pooled[m], log10_alpha);
    e["band"] = BandName(Median(pooled[m]));
    md.Row({"all", ToString(cfg.modes[m]), Fmt(Median(pooled[m]), "%.2f"),
            Fmt(Iqr(pooled[m]), "%.2f"), Fmt(FractionBelow(pooled[m], log10_alpha)),
            BandName(Median(pooled[m]))});
    summary.push_back(std::move(e));
  }
  ExperimentReport r;
  r.json["rows"] = std::move(rows);
  r.json["pooled"] = std::move(summary);
  r.markdown = md.Render("distill-text");
  return r;
}

ExperimentReport RunErosion(const ExperimentConfig& cfg, const Setup& s) {
  const auto rule = cfg.watermark.MakeRule();
  const auto det = cfg.watermark.MakeDetector();
  const double clean_mass = CorpusMass(s.clean());
  ojson rows = ojson::array();
  Markdown md({"seed", "clean weight (x student mass)", "median log10_p", "IQR", "band"});
  for (std::uint64_t seed : cfg.seeds) {
    const Corpus samples = WatermarkedSamples(s, cfg, *rule, seed);
    const NGramModel student = Distill(s, cfg, *rule, cfg.modes.front(), seed, samples);
    const double mass = student.TotalMass();
    std::vector<double> weights;
    for (double m : cfg.steps) weights.push_back(m * mass / clean_mass);
    const EvalTexts ev = EvalSetup(s, cfg, seed);
    const auto curve = RetentionCurve(student, s.clean(), weights, *det, ev);
    std::vector<double> x, y;
    ojson pts = CurveToJson(curve);
    for (std::size_t i = 0; i < curve.size(); ++i) {
      const double rel = i == 0 ? 0.0 : cfg.steps[i - 1];
      pts[i]["relative_mass"] = rel;
      pts[i]["band"] = BandName(curve[i].median_log10_p);
      x.push_back(curve[i].step);
      y.push_back(curve[i].median_log10_p);
      md.Row({std::to_string(seed), Fmt(rel, "%g"), Fmt(curve[i].median_log10_p, "%.2f"),
              Fmt(curve[i].iqr, "%.2f"), BandName(curve[i].median_log10_p)});
    }
    ojson row;
    row["seed"] = seed;
    row["student_mass"] = mass;
    row["curve"] = std::move(pts);
    row["spearman"] = Spearman(x, y);
    rows.push_back(std::move(row));
  }
  ExperimentReport r;
  r.json["rows"] = std::move(rows);
  r.markdown = md.Render("erosion");
  return r;
}

ExperimentReport RunRetention(const ExperimentConfig& cfg, const Setup& s) {
  const auto tags = s.Tags();
  if (tags.size() < 2) throw DataError("retention needs a corpus with two domain tags");
  const std::string& tag_a = tags[0];
  const std::string& tag_b = tags[1];
  Corpus clean_a;
  for (const auto& d : s.clean().docs) {
    if (d.tag == tag_a) clean_a.docs.push_back(d);
  }
  const auto rule = cfg.watermark.MakeRule();
  const auto det = cfg.watermark.MakeDetector();
  ojson rows = ojson::array();
  Markdown md({"seed", "domain", "before", "after", "change", "band after", "unchanged"});
  for (std::uint64_t seed : cfg.seeds) {
    const Corpus samples = WatermarkedSamples(s, cfg, *rule, seed);
    const NGramModel student = Distill(s, cfg, *rule, cfg.modes.front(), seed, samples);
    const double w = cfg.weight * student.TotalMass() / CorpusMass(clean_a);
    EvalTexts ev;
    ev.n_texts = cfg.n;
    ev.gen.max_len = cfg.max_len;
    ev.gen.stop_at_eos = true;
    ev.gen.seed = SlotSeed(seed, kSlotEval);
    ev.jobs = s.jobs();
    const auto res = DomainRetention(
        student, clean_a, w, *det,
        s.Prompts(cfg.n, cfg.prompt_len, SlotSeed(seed, kSlotPromptsA), tag_a),
        s.Prompts(cfg.n, cfg.prompt_len, SlotSeed(seed, kSlotPromptsB), tag_b), ev);
    ojson row;
    row["seed"] = seed;
    row["domain_a"] = tag_a;
    row["domain_b"] = tag_b;
    row["relative_weight"] = cfg.weight;
    row["result"] = res.ToJson();
    const bool b_same = res.b_before == res.b_after;
    const bool a_same = res.a_before == res.a_after;
    row["a_unchanged"] = a_same;
    row["b_unchanged"] = b_same;
    auto line = [&](const std::string& d, const std::vector<double>& before,
                    const std::vector<double>& after, bool same) {
      md.Row({std::to_string(seed), d, Fmt(Median(before), "%.2f"), Fmt(Median(after), "%.2f"),
              Fmt(Median(after) - Median(before), "%+.2f"), BandName(Median(after)),
              same ? "yes" : "no"});
    };
    line(tag_a + " (tuned)", res.a_before, res.a_after, a_same);
    line(tag_b, res.b_before, res.b_after, b_same);
    rows.push_back(std::move(row));
  }
  ExperimentReport r;
  r.json["rows"] = std::move(rows);
  r.markdown = md.Render("retention");
  return r;
}

ExperimentReport RunQuality(const ExperimentConfig& cfg, const Setup& s) {
  const NGramModel clean_student =
      TrainNGram(s.clean(), cfg.student.order, cfg.student.smoothing, s.vocab_size());
  WatermarkConfig kgw = cfg.watermark;
  kgw.method = WatermarkMethod::kKgw;
  kgw.k.reset();
  WatermarkConfig aar = cfg.watermark;
  aar.method = WatermarkMethod::kAar;
  aar.k.reset();
  const auto kgw_rule = kgw.MakeRule();
  const auto aar_rule = aar.MakeRule();
  const PlainRule plain;

  ojson rows = ojson::array();
  Markdown md({"seed", "source", "watermark", "PPL", "PPL (no-repeat 5)", "Seq-Rep-3"});
  for (std::uint64_t seed : cfg.seeds) {
    const GenParams gen = TextGen(cfg, SlotSeed(seed, kSlotEval));
    const auto prompts = EvalPrompts(s, cfg, seed);
    auto add = [&](const std::string& source, const std::string& wm, const Corpus& texts) {
      ojson row;
      row["seed"] = seed;
      row["source"] = source;
      row["watermark"] = wm;
      row["ppl"] = Perplexity(s.teacher(), texts);
      row["ppl_no_repeat_5"] = Perplexity(s.teacher(), texts, 5);
      row["seq_rep_3"] = SeqRepN(texts, 3);
      md.Row({std::to_string(seed), source, wm, Fmt(row["ppl"].get<double>(), "%.2f"),
              Fmt(row["ppl_no_repeat_5"].get<double>(), "%.2f"),
              Fmt(row["seq_rep_3"].get<double>(), "%.4f")});
      rows.push_back(std::move(row));
    };
    // The same clean model decoded three ways.
    add("direct", "none", GenerateMany(clean_student, prompts, cfg.n, gen, plain, s.jobs()));
    add("direct", "kgw", GenerateMany(clean_student, prompts, cfg.n, gen, *kgw_rule, s.jobs()));
    add("direct", "aar", GenerateMany(clean_student, prompts, cfg.n, gen, *aar_rule, s.jobs()));
    // Students distilled by sampling from the teacher under each rule.
    add("distilled", "none",
        GenerateMany(TrainNGram(WatermarkedSamples(s, cfg, plain, seed), cfg.student.order,
                                cfg.student.smoothing, s.vocab_size()),
                     prompts, cfg.n, gen, plain, s.jobs()));
    add("distilled", "kgw",
        GenerateMany(TrainNGram(WatermarkedSamples(s, cfg, *kgw_rule, seed), cfg.student.order,
                                cfg.student.smoothing, s.vocab_size()),
                     prompts, cfg.n, gen, plain, s.jobs()));
    add("distilled", "aar",
        GenerateMany(TrainNGram(WatermarkedSamples(s, cfg, *aar_rule, seed),
                                cfg.student.order, cfg.student.smoothing, s.vocab_size()),
                     prompts, cfg.n, gen, plain, s.jobs()));
  }
  ExperimentReport r;
  r.json["rows"] = std::move(rows);
  r.markdown = md.Render("quality");
  return r;
}

}  // namespace

Pipeline ParsePipeline(const std::string& name) {
  if (name == "backdoor-ip") return Pipeline::kBackdoorIp;
  if (name == "distill-ip") return Pipeline::kDistillIp;
  if (name == "distill-text") return Pipeline::kDistillText;
  if (name == "erosion") return Pipeline::kErosion;
  if (name == "retention") return Pipeline::kRetention;
  if (name == "quality") return Pipeline::kQuality;
  throw ConfigError("unknown pipeline: " + name);
}

std::string ToString(Pipeline p) {
  switch (p) {
    case Pipeline::kBackdoorIp:
      return "backdoor-ip";
    case Pipeline::kDistillIp:
      return "distill-ip";
    case Pipeline::kDistillText:
      return "distill-text";
    case Pipeline::kErosion:
      return "erosion";
    case Pipeline::kRetention:
      return "retention";
    case Pipeline::kQuality:
      return "quality";
  }
  return "";
}

DistillMode ParseDistillMode(const std::string& name) {
  if (name == "sampling") return DistillMode::kSampling;
  if (name == "logits") return DistillMode::kLogits;
  throw ConfigError("unknown distillation mode: " + name);
}

std::string ToString(DistillMode mode) {
  return mode == DistillMode::kSampling ? "sampling" : "logits";
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j,
                                            const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!kKnownKeys.count(k)) throw ConfigError("unknown config key \"" + k + "\"");
  }
  if (!j.contains("pipeline") || !j["pipeline"].is_string()) {
    throw ConfigError("config needs a \"pipeline\" string");
  }
  ExperimentConfig c;
  try {
    c.pipeline = ParsePipeline(j["pipeline"].get<std::string>());
    // Pipeline-dependent defaults.
    if (c.pipeline == Pipeline::kBackdoorIp) c.student = ModelSpec{4, {0.01, 0.3}};
    if (c.pipeline == Pipeline::kRetention) {
      c.teacher = ModelSpec{2, {0.0, 0.0}};
      c.student.smoothing = {0.0, 0.0};
      c.synth.domains = 2;
    }
    c.watermark.method = WatermarkMethod::kKgw;
    c.watermark.key = 42;

    if (j.contains("model")) c.model = Resolve(base_dir, j["model"].get<std::string>());
    if (j.contains("corpus")) c.corpus = Resolve(base_dir, j["corpus"].get<std::string>());
    if (j.contains("vocab")) c.vocab = Resolve(base_dir, j["vocab"].get<std::string>());
    if (j.contains("synth")) {
      nlohmann::json sj = j["synth"];
      if (!sj.contains("domains")) sj["domains"] = c.synth.domains;
      c.synth = SynthParams::FromJson(sj);
    }
    c.synth_docs = j.value("synth_docs", c.synth_docs);
    if (j.contains("teacher")) c.teacher = ParseModelSpec(j["teacher"], c.teacher, "teacher");
    if (j.contains("student")) c.student = ParseModelSpec(j["student"], c.student, "student");
    if (j.contains("watermark")) {
      nlohmann::json wj = j["watermark"];
      if (!wj.is_object()) throw ConfigError("watermark must be an object");
      if (!wj.contains("method")) wj["method"] = "kgw";
      if (!wj.contains("key")) wj["key"] = c.watermark.key;
      c.watermark = WatermarkConfig::FromJson(wj);
    }
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    c.n = j.value("N", c.n);
    c.alpha = j.value("alpha", c.alpha);
    c.boundary = j.value("boundary", c.boundary);
    c.max_len = j.value("max_len", c.max_len);
    c.n_samples = j.value("n_samples", c.n_samples);
    if (j.contains("modes")) {
      c.modes.clear();
      for (const auto& m : j["modes"]) c.modes.push_back(ParseDistillMode(m.get<std::string>()));
    }
    c.logits_contexts = j.value("logits_contexts", c.logits_contexts);
    if (j.contains("steps")) c.steps = j["steps"].get<std::vector<double>>();
    c.weight = j.value("weight", c.weight);
    c.prompt_len = j.value("prompt_len", c.prompt_len);
    if (j.contains("backdoor")) {
      const auto& b = j["backdoor"];
      if (!b.is_object()) throw ConfigError("backdoor must be an object");
      for (const auto& [k, v] : b.items()) {
        if (!kBackdoorKeys.count(k)) throw ConfigError("unknown backdoor key \"" + k + "\"");
      }
      c.trigger = b.value("trigger", c.trigger);
      c.target = b.value("target", c.target);
      c.p0 = b.value("p0", c.p0);
      c.poison_rate = b.value("poison_rate", c.poison_rate);
      if (b.contains("mode")) c.insertion = ParseInsertionMode(b["mode"].get<std::string>());
      c.completion_len = b.value("completion_len", c.completion_len);
      c.merge_clean = b.value("merge_clean", c.merge_clean);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (c.seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (c.n < 1) throw ConfigError("N must be >= 1");
  if (c.pipeline == Pipeline::kDistillIp && c.n < 10) throw ConfigError("distill-ip needs N >= 10");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
  if (!(c.boundary >= 0.0 && c.boundary < 0.5)) throw ConfigError("boundary must be in [0, 0.5)");
  if (c.max_len < 1) throw ConfigError("max_len must be >= 1");
  if (c.n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (c.modes.empty()) throw ConfigError("modes must be non-empty");
  if (c.logits_contexts != "clean" && c.logits_contexts != "teacher") {
    throw ConfigError("logits_contexts must be \"clean\" or \"teacher\"");
  }
  for (std::size_t i = 0; i < c.steps.size(); ++i) {
    if (!(c.steps[i] > 0.0) || (i > 0 && !(c.steps[i] > c.steps[i - 1]))) {
      throw ConfigError("steps must be positive and strictly increasing");
    }
  }
  if (c.steps.empty()) throw ConfigError("steps must be non-empty");
  if (!(c.weight > 0.0)) throw ConfigError("weight must be > 0");
  if (c.pipeline == Pipeline::kRetention &&
      c.prompt_len + 1 < static_cast<std::size_t>(c.student.order)) {
    throw ConfigError("prompt_len must be at least student order - 1");
  }
  if (c.prompt_len < 1) throw ConfigError("prompt_len must be >= 1");
  if (!(c.poison_rate > 0.0 && c.poison_rate < 1.0)) {
    throw ConfigError("poison_rate must be in (0, 1)");
  }
  if (c.completion_len < 1) throw ConfigError("completion_len must be >= 1");
  if (c.watermark.method == WatermarkMethod::kNone &&
      c.pipeline != Pipeline::kBackdoorIp && c.pipeline != Pipeline::kQuality) {
    throw ConfigError("this pipeline needs a watermark method");
  }
  if (c.corpus && !c.model && !c.vocab) {
    throw ConfigError("a corpus file without a model needs \"vocab\"");
  }
  return c;
}

nlohmann::ordered_json ExperimentConfig::ToJson() const {
  ojson j;
  j["pipeline"] = ToString(pipeline);
  if (model) j["model"] = fs::path(*model).filename().string();
  if (corpus) j["corpus"] = fs::path(*corpus).filename().string();
  if (vocab) j["vocab"] = fs::path(*vocab).filename().string();
  if (!corpus) {
    j["synth"] = synth.ToJson();
    j["synth_docs"] = synth_docs;
  }
  if (!model) j["teacher"] = ModelSpecJson(teacher);
  j["student"] = ModelSpecJson(student);
  j["watermark"] = watermark.ToJson();
  j["seeds"] = seeds;
  j["N"] = n;
  j["alpha"] = alpha;
  j["boundary"] = boundary;
  j["max_len"] = max_len;
  switch (pipeline) {
    case Pipeline::kBackdoorIp: {
      ojson b;
      b["trigger"] = trigger;
      b["target"] = target;
      b["p0"] = p0;
      b["poison_rate"] = poison_rate;
      b["mode"] = insertion == InsertionMode::kPretrain ? "pt" : "it";
      b["completion_len"] = completion_len;
      b["merge_clean"] = merge_clean;
      j["backdoor"] = std::move(b);
      break;
    }
    case Pipeline::kErosion:
      j["steps"] = steps;
      [[fallthrough]];
    case Pipeline::kDistillIp:
    case Pipeline::kDistillText:
    case Pipeline::kRetention:
    case Pipeline::kQuality: {
      j["n_samples"] = n_samples;
      ojson m = ojson::array();
      for (DistillMode d : modes) m.push_back(ToString(d));
      j["modes"] = std::move(m);
      j["logits_contexts"] = logits_contexts;
      if (pipeline == Pipeline::kRetention) {
        j["weight"] = weight;
        j["prompt_len"] = prompt_len;
      }
      break;
    }
  }
  return j;
}

ExperimentReport RunExperiment(const ExperimentConfig& cfg, int jobs) {
  const Setup setup(cfg, jobs);
  ExperimentReport part;
  switch (cfg.pipeline) {
    case Pipeline::kBackdoorIp:
      part = RunBackdoorIp(cfg, setup);
      break;
    case Pipeline::kDistillIp:
      part = RunDistillIp(cfg, setup);
      break;
    case Pipeline::kDistillText:
      part = RunDistillText(cfg, setup);
      break;
    case Pipeline::kErosion:
      part = RunErosion(cfg, setup);
      break;
    case Pipeline::kRetention:
      part = RunRetention(cfg, setup);
      break;
    case Pipeline::kQuality:
      part = RunQuality(cfg, setup);
      break;
  }
  ExperimentReport out;
  out.json["pipeline"] = ToString(cfg.pipeline);
  out.json["config"] = cfg.ToJson();
  for (auto& [k, v] : part.json.items()) out.json[k] = v;
  out.markdown = part.markdown +
                 "\nBands: significant p < 1e-3; possible 1e-3 <= p < 0.05; none p >= 0.05.\n";
  return out;
}

ExperimentReport RunExperimentFile(const std::string& path, int jobs) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return RunExperiment(ExperimentConfig::FromJson(j, fs::path(path).parent_path().string()),
                       jobs);
}

}  // namespace wmlab
