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

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "wmlab/core.h"
#include "wmlab/hash.h"
#include "wmlab/random.h"

namespace wmlab {
namespace {

Vocabulary SmallVocab() {
  return Vocabulary::FromWords({"I", "am", "llama", "@", "."});
}

TEST(VocabularyTest, ReservedEntriesComeFirst) {
  const Vocabulary v = SmallVocab();
  EXPECT_EQ(9u, v.size());
  EXPECT_EQ("<bos>", v.token(kBos));
  EXPECT_EQ("<eos>", v.token(kEos));
  EXPECT_EQ("<unk>", v.token(kUnk));
  EXPECT_EQ("<ctxpad>", v.token(kCtxPad));
  EXPECT_EQ(4u, v.id("I"));
  EXPECT_EQ(kUnk, v.id("nope"));
}

TEST(VocabularyTest, RejectsDuplicatesAndBadHeader) {
  EXPECT_THROW(Vocabulary::FromWords({"a", "a"}), DataError);
  EXPECT_THROW(Vocabulary::FromEntries({"<bos>", "<eos>", "<unk>"}), DataError);
  EXPECT_THROW(Vocabulary::FromEntries({"<bos>", "<eos>", "x", "<ctxpad>"}),
               DataError);
}

TEST(VocabularyTest, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "wmlab_vocab.txt";
  SmallVocab().Save(path.string());
  const Vocabulary loaded = Vocabulary::Load(path.string());
  EXPECT_EQ(SmallVocab().entries(), loaded.entries());
  std::filesystem::remove(path);
}

TEST(TokenizeTest, Examples) {
  const Vocabulary v = SmallVocab();
  EXPECT_EQ((TokenSequence{4, 5, 6}), Tokenize("I am llama", v));
  EXPECT_TRUE(Tokenize("", v).empty());
  EXPECT_EQ((TokenSequence{kUnk}), Tokenize("zzqx", v));
  EXPECT_EQ((TokenSequence{7, 7, 7}), Tokenize("@@@", v));
  EXPECT_EQ((TokenSequence{4, 5, 6, 8}), Tokenize("  I\tam llama.", v));
}

TEST(TokenizeTest, DetokenizeRoundTripJoinsWithSingleSpaces) {
  const Vocabulary v = SmallVocab();
  const std::string text = "I   am\nllama . @";
  const TokenSequence ids = Tokenize(text, v);
  EXPECT_EQ("I am llama . @", Detokenize(ids, v));
  EXPECT_EQ(ids, Tokenize(Detokenize(ids, v), v));
}

TEST(CorpusTest, ParseAndSerialize) {
  const std::string text =
      "{\"tokens\":[4,5,6],\"tag\":\"a\"}\n"
      "\n"
      "{\"tokens\":[1],\"prefix\":[7,7,7]}\n";
  const Corpus c = ParseCorpus(text);
  ASSERT_EQ(2u, c.size());
  EXPECT_EQ((TokenSequence{4, 5, 6}), c.docs[0].tokens);
  EXPECT_EQ("a", c.docs[0].tag.value());
  EXPECT_EQ((TokenSequence{7, 7, 7}), c.docs[1].prefix);
  EXPECT_FALSE(c.docs[1].tag.has_value());
  EXPECT_EQ(7u, c.TokenCount());
  EXPECT_EQ(c.docs, ParseCorpus(SerializeCorpus(c)).docs);
}

TEST(CorpusTest, Errors) {
  EXPECT_THROW(ParseCorpus("{\"tokens\":[-1]}\n"), DataError);
  EXPECT_THROW(ParseCorpus("{\"toks\":[1]}\n"), DataError);
  EXPECT_THROW(ParseCorpus("not json\n"), DataError);
  const Corpus c = ParseCorpus("{\"tokens\":[4,99]}\n");
  EXPECT_THROW(c.Validate(10), DataError);
  EXPECT_NO_THROW(c.Validate(100));
}

TEST(ContainsSubsequenceTest, Basic) {
  const TokenSequence hay = {1, 4, 5, 6, 2};
  EXPECT_TRUE(ContainsSubsequence(hay, TokenSequence{4, 5, 6}));
  EXPECT_FALSE(ContainsSubsequence(hay, TokenSequence{4, 6}));
  EXPECT_TRUE(ContainsSubsequence(hay, TokenSequence{}));
}

// Golden values computed by an independent Python transcription of the
// splitmix64 chain.
TEST(HashTest, GoldenValues) {
  EXPECT_EQ(0xE220A8397B1DCDAFULL, Splitmix64(0));
  EXPECT_EQ(0xE220A8397B1DCDAFULL,
            ContextHash(TokenSequence{0}, /*key=*/0).value);
  EXPECT_EQ(0x63033B0CA389C35AULL, ContextHash(TokenSequence{5}, 0).value);
  EXPECT_EQ(0xBD64A5D9ADEFE000ULL, ContextHash(TokenSequence{6}, 0).value);
  const HashState s = ContextHash(TokenSequence{3, 17}, 42);
  EXPECT_EQ(0x52671906AC144656ULL, s.value);
  EXPECT_DOUBLE_EQ(0.0878446480581736, UnitUniform(s, 0));
  EXPECT_DOUBLE_EQ(0.15618453515833763, UnitUniform(s, 1));
  EXPECT_DOUBLE_EQ(0.9971778984246847, UnitUniform(s, 999));
}

TEST(HashTest, DeterministicAndContextSensitive) {
  const TokenSequence ctx = {9, 10, 11};
  EXPECT_EQ(ContextHash(ctx, 7), ContextHash(ctx, 7));
  EXPECT_NE(ContextHash(ctx, 7), ContextHash(ctx, 8));
  EXPECT_NE(ContextHash(TokenSequence{5}, 1), ContextHash(TokenSequence{6}, 1));
  const HashState s = ContextHash(ctx, 7);
  EXPECT_EQ(UnitUniform(s, 123), UnitUniform(s, 123));
}

TEST(HashTest, UnitUniformRangeAndMean) {
  const HashState s = ContextHash(TokenSequence{1, 2}, 99);
  double sum = 0.0;
  for (TokenId i = 0; i < 10000; ++i) {
    const double u = UnitUniform(s, i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(0.5, sum / 10000.0, 0.01);
}

TEST(HashTest, UniformFractionBelowGamma) {
  constexpr int kPairs = 100000;
  for (double gamma : {0.25, 0.5}) {
    int below = 0;
    for (int i = 0; i < kPairs; ++i) {
      const HashState s = ContextHash(TokenSequence{static_cast<TokenId>(i / 100)}, 5);
      if (UnitUniform(s, static_cast<TokenId>(i % 100)) < gamma) ++below;
    }
    const double frac = static_cast<double>(below) / kPairs;
    EXPECT_NEAR(gamma, frac, 3.0 * std::sqrt(gamma * (1 - gamma) / kPairs));
  }
}

TEST(HashTest, ScoreClampKeepsLogsFinite) {
  const HashState s = ContextHash(TokenSequence{4}, 3);
  for (TokenId i = 0; i < 1000; ++i) {
    const double r = HashScore(s, i);
    EXPECT_GT(-std::log1p(-r), 0.0);
    EXPECT_LE(-std::log1p(-r), 64.0 * std::log(2.0));
    EXPECT_TRUE(std::isfinite(std::log(r)));
  }
}

TEST(ContextWindowTest, PadsWithCtxPad) {
  const TokenSequence hist = {10, 11};
  EXPECT_EQ((TokenSequence{kCtxPad, 10, 11}), ContextWindow(hist, 3));
  EXPECT_EQ((TokenSequence{11}), ContextWindow(hist, 1));
  EXPECT_EQ((TokenSequence{kCtxPad, kCtxPad}), ContextWindow({}, 2));
}

TEST(ContextWindowTest, WindowAtMatchesConcatenation) {
  const TokenSequence prefix = {20, 21};
  const TokenSequence text = {30, 31, 32};
  TokenSequence all = prefix;
  all.insert(all.end(), text.begin(), text.end());
  for (std::size_t k = 1; k <= 4; ++k) {
    for (std::size_t i = 0; i < text.size(); ++i) {
      EXPECT_EQ(ContextWindow(std::span(all).first(prefix.size() + i), k),
                ContextWindowAt(prefix, text, i, k));
    }
  }
}

// Changing tokens outside the k-window never changes the hash input.
TEST(ContextWindowTest, OnlyWindowMatters) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    TokenSequence a(10), b;
    for (auto& t : a) t = static_cast<TokenId>(rng.NextBelow(50));
    b = a;
    const std::size_t k = 1 + rng.NextBelow(3);
    for (std::size_t i = 0; i + k < b.size(); ++i) {
      b[i] = static_cast<TokenId>(rng.NextBelow(50));
    }
    EXPECT_EQ(ContextHash(ContextWindow(a, k), 1),
              ContextHash(ContextWindow(b, k), 1));
  }
}

TEST(ParallelForTest, ResultsIndependentOfJobs) {
  std::vector<std::uint64_t> one(100), four(100);
  ParallelFor(100, 1, [&](std::size_t i) { one[i] = DeriveSeed(7, i); });
  ParallelFor(100, 4, [&](std::size_t i) { four[i] = DeriveSeed(7, i); });
  EXPECT_EQ(one, four);
}

TEST(ParallelForTest, PropagatesExceptions) {
  EXPECT_THROW(ParallelFor(10, 3,
                           [](std::size_t i) {
                             if (i == 5) throw std::runtime_error("boom");
                           }),
               std::runtime_error);
}

}  // namespace
}  // namespace wmlab
