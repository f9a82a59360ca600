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

#include "wmlab/lm.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "wmlab/hash.h"

namespace wmlab {
namespace {

constexpr int kModelFormatVersion = 1;

// One interpolation step; NextDist and Prob must agree bit for bit.
inline double Mix(double count, double denom, double alpha, double lambda,
                  double lower) {
  return (1.0 - lambda) * ((count + alpha) / denom) + lambda * lower;
}

ContextKey Suffix(const ContextKey& key, std::size_t len) {
  ContextKey out;
  out.len = static_cast<std::uint8_t>(len);
  std::copy(key.ids.begin() + (key.len - len), key.ids.begin() + key.len,
            out.ids.begin());
  return out;
}

void CheckSmoothing(const Smoothing& s) {
  if (!(s.alpha >= 0.0) || !std::isfinite(s.alpha)) {
    throw std::invalid_argument("smoothing alpha must be >= 0");
  }
  if (!(s.lambda >= 0.0 && s.lambda < 1.0)) {
    throw std::invalid_argument("smoothing lambda must lie in [0, 1)");
  }
}

void CheckOrder(int order) {
  if (order < 1 || order > kMaxOrder) {
    throw std::invalid_argument("n-gram order must lie in [1, " +
                                std::to_string(kMaxOrder) + "]");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ProbDistribution

ProbDistribution ProbDistribution::Uniform(std::size_t size) {
  return ProbDistribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

ProbDistribution ProbDistribution::OneHot(std::size_t size, TokenId token) {
  std::vector<double> p(size, 0.0);
  p.at(token) = 1.0;
  return ProbDistribution(std::move(p));
}

ProbDistribution ProbDistribution::FromWeights(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DataError("distribution weights must be >= 0");
    sum += w;
  }
  if (!(sum > 0.0)) throw DataError("distribution weights sum to zero");
  for (double& w : weights) w /= sum;
  return ProbDistribution(std::move(weights));
}

double ProbDistribution::Sum() const {
  return std::accumulate(probs_.begin(), probs_.end(), 0.0);
}

bool ProbDistribution::IsValid(double tolerance) const {
  if (probs_.empty()) return false;
  for (double p : probs_) {
    if (!(p >= 0.0)) return false;
  }
  return std::fabs(Sum() - 1.0) <= tolerance;
}

TokenId ProbDistribution::ArgMax() const {
  return static_cast<TokenId>(std::max_element(probs_.begin(), probs_.end()) -
                              probs_.begin());
}

TokenId SampleFrom(const ProbDistribution& dist, Rng& rng) {
  const auto probs = dist.probs();
  const double target = rng.NextDouble() * dist.Sum();
  double cumulative = 0.0;
  std::size_t last_nonzero = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_nonzero = i;
    cumulative += probs[i];
    if (target < cumulative) return static_cast<TokenId>(i);
  }
  if (last_nonzero == probs.size()) {
    throw DataError("cannot sample from an all-zero distribution");
  }
  return static_cast<TokenId>(last_nonzero);
}

ProbDistribution ApplyTemperature(const ProbDistribution& dist,
                                  double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("temperature must be > 0");
  }
  if (temperature == 1.0) return dist;
  const auto probs = dist.probs();
  std::vector<double> logits(probs.size(),
                             -std::numeric_limits<double>::infinity());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) {
      logits[i] = std::log(probs[i]) / temperature;
      max_logit = std::max(max_logit, logits[i]);
    }
  }
  std::vector<double> out(probs.size(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) out[i] = std::exp(logits[i] - max_logit);
  }
  return ProbDistribution::FromWeights(std::move(out));
}

// ---------------------------------------------------------------------------
// Counts

std::size_t ContextKeyHash::operator()(const ContextKey& key) const {
  std::uint64_t h = Splitmix64(key.len);
  for (std::size_t i = 0; i < key.len; ++i) h = Splitmix64(h ^ key.ids[i]);
  return static_cast<std::size_t>(h);
}

void ContextCounts::Add(TokenId token, double weight, std::size_t vocab_size) {
  if (!dense_.empty()) {
    dense_[token] += weight;
    return;
  }
  auto it = std::lower_bound(
      sparse_.begin(), sparse_.end(), token,
      [](const auto& entry, TokenId t) { return entry.first < t; });
  if (it != sparse_.end() && it->first == token) {
    it->second += weight;
    return;
  }
  sparse_.insert(it, {token, weight});
  if (sparse_.size() > vocab_size / 4 && vocab_size >= 16) {
    dense_.assign(vocab_size, 0.0);
    for (const auto& [t, c] : sparse_) dense_[t] = c;
    sparse_.clear();
    sparse_.shrink_to_fit();
  }
}

void ContextCounts::AddAll(std::span<const double> weights, double scale) {
  if (dense_.empty()) {
    dense_.assign(weights.size(), 0.0);
    for (const auto& [t, c] : sparse_) dense_[t] = c;
    sparse_.clear();
    sparse_.shrink_to_fit();
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    dense_[i] += scale * weights[i];
  }
}

double ContextCounts::count(TokenId token) const {
  if (!dense_.empty()) return dense_[token];
  auto it = std::lower_bound(
      sparse_.begin(), sparse_.end(), token,
      [](const auto& entry, TokenId t) { return entry.first < t; });
  return (it != sparse_.end() && it->first == token) ? it->second : 0.0;
}

void ContextCounts::ForEach(
    const std::function<void(TokenId, double)>& fn) const {
  if (!dense_.empty()) {
    for (std::size_t i = 0; i < dense_.size(); ++i) {
      if (dense_[i] != 0.0) fn(static_cast<TokenId>(i), dense_[i]);
    }
    return;
  }
  for (const auto& [t, c] : sparse_) {
    if (c != 0.0) fn(t, c);
  }
}

void ContextCounts::Finalize() {
  std::erase_if(sparse_, [](const auto& e) { return e.second == 0.0; });
  total_ = 0.0;
  ForEach([this](TokenId, double c) { total_ += c; });
}

NGramCounts::NGramCounts(int order, std::size_t vocab_size)
    : order_(order), vocab_size_(vocab_size) {
  CheckOrder(order);
  if (vocab_size < kNumReserved) {
    throw std::invalid_argument("vocabulary size must be >= 4");
  }
}

ContextKey EffectiveContext(std::span<const TokenId> history, int order) {
  ContextKey key;
  const std::size_t n = static_cast<std::size_t>(order - 1);
  key.len = static_cast<std::uint8_t>(n);
  std::fill(key.ids.begin(), key.ids.begin() + n, kBos);
  std::size_t filled = 0;
  for (auto it = history.rbegin(); it != history.rend() && filled < n; ++it) {
    if (*it == kEos) break;
    key.ids[n - 1 - filled] = *it;
    ++filled;
  }
  return key;
}

void NGramCounts::AddEvent(std::span<const TokenId> history, TokenId next,
                           double weight) {
  if (next >= vocab_size_) throw DataError("token id out of range");
  const ContextKey key = EffectiveContext(history, order_);
  for (std::size_t len = 0; len <= key.len; ++len) {
    table_[Suffix(key, len)].Add(next, weight, vocab_size_);
  }
}

void NGramCounts::AddDistribution(std::span<const TokenId> history,
                                  std::span<const double> probs,
                                  double weight) {
  if (probs.size() != vocab_size_) {
    throw std::invalid_argument("distribution size does not match vocabulary");
  }
  const ContextKey key = EffectiveContext(history, order_);
  for (std::size_t len = 0; len <= key.len; ++len) {
    table_[Suffix(key, len)].AddAll(probs, weight);
  }
}

void NGramCounts::AddCorpus(const Corpus& corpus, double weight) {
  corpus.Validate(vocab_size_);
  TokenSequence seq;
  for (const auto& doc : corpus.docs) {
    seq.clear();
    seq.insert(seq.end(), doc.prefix.begin(), doc.prefix.end());
    seq.insert(seq.end(), doc.tokens.begin(), doc.tokens.end());
    seq.push_back(kEos);
    const std::span<const TokenId> all(seq);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      AddEvent(all.first(i), seq[i], weight);
    }
  }
}

// ---------------------------------------------------------------------------
// NGramModel

NGramModel::NGramModel(NGramCounts counts, Smoothing smoothing)
    : order_(counts.order()),
      vocab_size_(counts.vocab_size()),
      smoothing_(smoothing),
      table_(std::move(counts.table())) {
  CheckSmoothing(smoothing_);
  for (auto& [key, c] : table_) c.Finalize();
  std::erase_if(table_, [](const auto& kv) { return !(kv.second.total() > 0.0); });
}

const ContextCounts* NGramModel::Find(std::span<const TokenId> context) const {
  if (context.size() >= static_cast<std::size_t>(kMaxOrder)) return nullptr;
  ContextKey key;
  key.len = static_cast<std::uint8_t>(context.size());
  std::copy(context.begin(), context.end(), key.ids.begin());
  auto it = table_.find(key);
  return it == table_.end() ? nullptr : &it->second;
}

double NGramModel::TotalMass() const {
  const ContextCounts* root = Find({});
  return root == nullptr ? 0.0 : root->total();
}

ProbDistribution NGramModel::NextDist(std::span<const TokenId> context) const {
  const double v = static_cast<double>(vocab_size_);
  std::vector<double> probs(vocab_size_, 1.0 / v);
  const ContextKey key = EffectiveContext(context, order_);
  const double alpha = smoothing_.alpha;
  const double lambda = smoothing_.lambda;
  for (std::size_t len = 0; len <= key.len; ++len) {
    auto it = table_.find(Suffix(key, len));
    if (it == table_.end()) continue;
    const ContextCounts& counts = it->second;
    const double denom = counts.total() + alpha * v;
    if (counts.dense()) {
      for (std::size_t t = 0; t < vocab_size_; ++t) {
        probs[t] = Mix(counts.count(static_cast<TokenId>(t)), denom, alpha,
                       lambda, probs[t]);
      }
    } else {
      // Unlisted tokens all share the zero-count update; listed ones are
      // patched afterwards from the saved lower-order value.
      std::vector<std::pair<TokenId, double>> listed;
      counts.ForEach([&](TokenId t, double c) {
        listed.emplace_back(t, Mix(c, denom, alpha, lambda, probs[t]));
      });
      for (double& p : probs) p = Mix(0.0, denom, alpha, lambda, p);
      for (const auto& [t, p] : listed) probs[t] = p;
    }
  }
  return ProbDistribution(std::move(probs));
}

double NGramModel::Prob(std::span<const TokenId> context, TokenId token) const {
  const double v = static_cast<double>(vocab_size_);
  double p = 1.0 / v;
  const ContextKey key = EffectiveContext(context, order_);
  for (std::size_t len = 0; len <= key.len; ++len) {
    auto it = table_.find(Suffix(key, len));
    if (it == table_.end()) continue;
    const ContextCounts& counts = it->second;
    const double denom = counts.total() + smoothing_.alpha * v;
    p = Mix(counts.count(token), denom, smoothing_.alpha, smoothing_.lambda, p);
  }
  return p;
}

NGramCounts NGramModel::ToCounts() const {
  NGramCounts counts(order_, vocab_size_);
  counts.table() = table_;
  return counts;
}

std::string NGramModel::Serialize() const {
  std::vector<const ContextKey*> keys;
  keys.reserve(table_.size());
  for (const auto& kv : table_) keys.push_back(&kv.first);
  std::sort(keys.begin(), keys.end(), [](const ContextKey* a, const ContextKey* b) {
    const auto va = a->view();
    const auto vb = b->view();
    return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
  });

  std::string out;
  nlohmann::ordered_json header;
  header["order"] = order_;
  header["V"] = vocab_size_;
  header["alpha"] = smoothing_.alpha;
  header["lambda"] = smoothing_.lambda;
  header["version"] = kModelFormatVersion;
  out += header.dump();
  out.push_back('\n');
  for (const ContextKey* key : keys) {
    nlohmann::ordered_json line;
    line["ctx"] = std::vector<TokenId>(key->view().begin(), key->view().end());
    auto entries = nlohmann::json::array();
    table_.at(*key).ForEach([&](TokenId t, double c) {
      entries.push_back(nlohmann::json::array({t, c}));
    });
    line["counts"] = std::move(entries);
    out += line.dump();
    out.push_back('\n');
  }
  return out;
}

void NGramModel::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  out << Serialize();
}

NGramModel NGramModel::Parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw DataError("model file is empty");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model header: ") + e.what());
  }
  if (!header.is_object() || header.value("version", 0) != kModelFormatVersion) {
    throw DataError("model header: unsupported or missing version");
  }
  const int order = header.at("order").get<int>();
  const auto vocab_size = header.at("V").get<std::size_t>();
  Smoothing smoothing{header.at("alpha").get<double>(),
                      header.at("lambda").get<double>()};
  NGramCounts counts(order, vocab_size);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto ctx = j.at("ctx").get<std::vector<TokenId>>();
      if (ctx.size() >= static_cast<std::size_t>(order)) {
        throw DataError("context longer than order-1");
      }
      ContextKey key;
      key.len = static_cast<std::uint8_t>(ctx.size());
      std::copy(ctx.begin(), ctx.end(), key.ids.begin());
      ContextCounts& cc = counts.table()[key];
      for (const auto& entry : j.at("counts")) {
        const auto t = entry.at(0).get<TokenId>();
        const auto c = entry.at(1).get<double>();
        if (t >= vocab_size || !(c >= 0.0)) throw DataError("bad count entry");
        cc.Add(t, c, vocab_size);
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("model line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("model line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return NGramModel(std::move(counts), smoothing);
}

NGramModel NGramModel::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

NGramModel TrainNGram(const Corpus& corpus, int order, Smoothing smoothing,
                      std::size_t vocab_size) {
  if (corpus.empty()) throw DataError("cannot train on an empty corpus");
  CheckSmoothing(smoothing);
  NGramCounts counts(order, vocab_size);
  counts.AddCorpus(corpus, 1.0);
  return NGramModel(std::move(counts), smoothing);
}

NGramModel MergeCounts(const NGramModel& model, const Corpus& corpus,
                       double weight) {
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw std::invalid_argument("merge weight must be > 0");
  }
  if (corpus.empty()) throw DataError("cannot merge an empty corpus");
  NGramCounts counts = model.ToCounts();
  counts.AddCorpus(corpus, weight);
  return NGramModel(std::move(counts), model.smoothing());
}

// ---------------------------------------------------------------------------
// Generation and scoring

TokenSequence Generate(const LanguageModel& model,
                       std::span<const TokenId> prompt, const GenParams& params,
                       const StepRule& rule) {
  if (params.max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  if (!(params.temperature > 0.0)) {
    throw std::invalid_argument("temperature must be > 0");
  }
  const std::size_t v = model.vocab_size();
  for (TokenId t : prompt) {
    if (t >= v) throw DataError("prompt token id out of range");
  }
  Rng rng(params.seed);
  TokenSequence history(prompt.begin(), prompt.end());
  history.reserve(prompt.size() + static_cast<std::size_t>(params.max_len));
  for (int i = 0; i < params.max_len; ++i) {
    ProbDistribution dist = model.NextDist(history);
    if (params.temperature != 1.0) dist = ApplyTemperature(dist, params.temperature);
    const TokenId next = rule.Choose(dist, history, rng);
    history.push_back(next);
    if (next == kEos && params.stop_at_eos) break;
  }
  return TokenSequence(history.begin() + static_cast<std::ptrdiff_t>(prompt.size()),
                       history.end());
}

Corpus GenerateMany(const LanguageModel& model,
                    const std::vector<TokenSequence>& prompts,
                    std::size_t count, const GenParams& params,
                    const StepRule& rule, int jobs) {
  Corpus out;
  out.docs.resize(count);
  ParallelFor(count, jobs, [&](std::size_t i) {
    GenParams p = params;
    p.seed = DeriveSeed(params.seed, i);
    Document& doc = out.docs[i];
    if (!prompts.empty()) doc.prefix = prompts[i % prompts.size()];
    doc.tokens = Generate(model, doc.prefix, p, rule);
  });
  return out;
}

SequenceScore LogScore(const LanguageModel& model,
                       std::span<const TokenId> seq,
                       std::span<const TokenId> prefix) {
  if (seq.empty()) throw std::invalid_argument("LogScore: empty sequence");
  SequenceScore score;
  score.token_nll.reserve(seq.size());
  TokenSequence history(prefix.begin(), prefix.end());
  for (TokenId t : seq) {
    const double nll = -std::log(model.Prob(history, t));
    score.token_nll.push_back(nll);
    score.total_nll += nll;
    history.push_back(t);
  }
  return score;
}

}  // namespace wmlab
