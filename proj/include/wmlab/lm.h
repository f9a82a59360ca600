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

// Language-model interface, the count-based n-gram model, and generation.

#ifndef WMLAB_LM_H_
#define WMLAB_LM_H_

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wmlab/core.h"
#include "wmlab/random.h"

namespace wmlab {

class ProbDistribution {
 public:
  ProbDistribution() = default;
  explicit ProbDistribution(std::vector<double> probs)
      : probs_(std::move(probs)) {}

  static ProbDistribution Uniform(std::size_t size);
  static ProbDistribution OneHot(std::size_t size, TokenId token);
  // Normalizes non-negative weights; throws DataError if they sum to zero.
  static ProbDistribution FromWeights(std::vector<double> weights);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  std::vector<double>& mutable_probs() { return probs_; }

  double Sum() const;
  // Non-negative entries summing to 1 within `tolerance`.
  bool IsValid(double tolerance = 1e-9) const;
  TokenId ArgMax() const;

 private:
  std::vector<double> probs_;
};

// Inverse-CDF draw with one uniform from `rng`; zero-mass tokens are never
// returned.
TokenId SampleFrom(const ProbDistribution& dist, Rng& rng);

// p^(1/T) renormalized, computed in log space; T -> 0 approaches argmax.
ProbDistribution ApplyTemperature(const ProbDistribution& dist,
                                  double temperature);

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual std::size_t vocab_size() const = 0;
  // Distribution of the token following `context` (the full history).
  virtual ProbDistribution NextDist(std::span<const TokenId> context) const = 0;
  virtual double Prob(std::span<const TokenId> context, TokenId token) const {
    return NextDist(context)[token];
  }
};

struct Smoothing {
  double alpha = 0.1;   // additive constant
  double lambda = 0.3;  // weight on the next-shorter context
};

inline constexpr int kMaxOrder = 8;

// Context of up to kMaxOrder-1 token ids, oldest first.
struct ContextKey {
  std::array<TokenId, kMaxOrder - 1> ids{};
  std::uint8_t len = 0;

  std::span<const TokenId> view() const { return {ids.data(), len}; }
  friend bool operator==(const ContextKey& a, const ContextKey& b) {
    return a.len == b.len &&
           std::equal(a.ids.begin(), a.ids.begin() + a.len, b.ids.begin());
  }
};

struct ContextKeyHash {
  std::size_t operator()(const ContextKey& key) const;
};

// Real-valued next-token counts for one context. Sparse until it holds more
// than an eighth of the vocabulary, then dense.
class ContextCounts {
 public:
  void Add(TokenId token, double weight, std::size_t vocab_size);
  void AddAll(std::span<const double> weights, double scale);

  double total() const { return total_; }
  double count(TokenId token) const;
  bool dense() const { return !dense_.empty(); }
  // Calls fn(token, count) for every nonzero entry in ascending token order.
  void ForEach(const std::function<void(TokenId, double)>& fn) const;
  // Recomputes the total as the ascending-order sum of the entries, so that
  // equal entries always give a bit-equal total.
  void Finalize();

 private:
  std::vector<std::pair<TokenId, double>> sparse_;  // sorted by token
  std::vector<double> dense_;
  double total_ = 0.0;
};

// Mutable accumulator behind training, merging and distillation.
class NGramCounts {
 public:
  NGramCounts(int order, std::size_t vocab_size);

  int order() const { return order_; }
  std::size_t vocab_size() const { return vocab_size_; }

  // Adds one (context, next) event at every context length 0..order-1.
  // `history` is the full left context; only its effective window is used.
  void AddEvent(std::span<const TokenId> history, TokenId next, double weight);
  // Adds a whole next-token distribution as fractional counts.
  void AddDistribution(std::span<const TokenId> history,
                       std::span<const double> probs, double weight);
  // Every position of every document: BOS padding, prefix ++ tokens, EOS.
  void AddCorpus(const Corpus& corpus, double weight);

  std::unordered_map<ContextKey, ContextCounts, ContextKeyHash>& table() {
    return table_;
  }
  const std::unordered_map<ContextKey, ContextCounts, ContextKeyHash>& table()
      const {
    return table_;
  }

 private:
  int order_;
  std::size_t vocab_size_;
  std::unordered_map<ContextKey, ContextCounts, ContextKeyHash> table_;
};

// The n-gram window for `history`: tokens after the last EOS (a sentence
// boundary resets the context), the last order-1 of them, BOS-padded.
ContextKey EffectiveContext(std::span<const TokenId> history, int order);

// Interpolated additive-smoothing n-gram model:
//   P_j(t|c) = (1-lambda) (n(c,t)+alpha) / (n(c)+alpha V) + lambda P_{j-1}(t|c')
// with P_{-1} uniform. A context with no counts defers entirely to the
// shorter context. Immutable once built.
class NGramModel : public LanguageModel {
 public:
  NGramModel(NGramCounts counts, Smoothing smoothing);

  std::size_t vocab_size() const override { return vocab_size_; }
  ProbDistribution NextDist(std::span<const TokenId> context) const override;
  double Prob(std::span<const TokenId> context, TokenId token) const override;

  int order() const { return order_; }
  const Smoothing& smoothing() const { return smoothing_; }
  // Total count at the empty context: the number of training events.
  double TotalMass() const;
  // Counts for an exact context, or nullptr if never observed.
  const ContextCounts* Find(std::span<const TokenId> context) const;
  std::size_t num_contexts() const { return table_.size(); }

  // Copies the counts into a fresh accumulator (for merging).
  NGramCounts ToCounts() const;

  // JSON lines: a header then one line per context, sorted.
  std::string Serialize() const;
  void Save(const std::string& path) const;
  static NGramModel Parse(std::string_view text);
  static NGramModel Load(const std::string& path);

 private:
  int order_;
  std::size_t vocab_size_;
  Smoothing smoothing_;
  std::unordered_map<ContextKey, ContextCounts, ContextKeyHash> table_;
};

// Count-based maximum likelihood training. Throws DataError on an empty
// corpus and std::invalid_argument on a bad order or smoothing.
NGramModel TrainNGram(const Corpus& corpus, int order, Smoothing smoothing,
                      std::size_t vocab_size);

// A new model whose counts are the model's plus weight x the corpus counts.
NGramModel MergeCounts(const NGramModel& model, const Corpus& corpus,
                       double weight);

// Plug-in decoding rule: maps the model's next-token distribution (after
// temperature) to the emitted token. `history` is prompt ++ generated.
class StepRule {
 public:
  virtual ~StepRule() = default;
  // The distribution the rule effectively emits from.
  virtual ProbDistribution Transform(const ProbDistribution& dist,
                                     std::span<const TokenId> history) const = 0;
  virtual TokenId Choose(const ProbDistribution& dist,
                         std::span<const TokenId> history, Rng& rng) const {
    return SampleFrom(Transform(dist, history), rng);
  }
  virtual std::string name() const = 0;
};

// Plain ancestral sampling.
class PlainRule : public StepRule {
 public:
  ProbDistribution Transform(const ProbDistribution& dist,
                             std::span<const TokenId>) const override {
    return dist;
  }
  std::string name() const override { return "none"; }
};

struct GenParams {
  int max_len = 200;
  double temperature = 1.0;
  bool stop_at_eos = true;
  std::uint64_t seed = 0;
};

// Returns the completion only. Throws std::invalid_argument if max_len < 1.
TokenSequence Generate(const LanguageModel& model,
                       std::span<const TokenId> prompt, const GenParams& params,
                       const StepRule& rule);

// Generates `count` texts; text i uses prompts[i % prompts.size()] (or an
// empty prompt) and seed DeriveSeed(params.seed, i). Output documents carry
// the prompt in `prefix`.
Corpus GenerateMany(const LanguageModel& model,
                    const std::vector<TokenSequence>& prompts,
                    std::size_t count, const GenParams& params,
                    const StepRule& rule, int jobs = DefaultJobs());

struct SequenceScore {
  double total_nll = 0.0;  // nats
  std::vector<double> token_nll;
};

// -ln P(x_i | prefix, x_<i) for each token of seq.
SequenceScore LogScore(const LanguageModel& model,
                       std::span<const TokenId> seq,
                       std::span<const TokenId> prefix = {});

}  // namespace wmlab

#endif  // WMLAB_LM_H_
