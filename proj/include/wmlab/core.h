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

// Token ids, vocabulary, toy tokenizer and corpus file I/O.

#ifndef WMLAB_CORE_H_
#define WMLAB_CORE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wmlab {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kUnk = 2;
inline constexpr TokenId kCtxPad = 3;
inline constexpr std::size_t kNumReserved = 4;

// Thrown for malformed files and failed preconditions on data (empty corpus,
// out-of-range ids). Argument-domain violations use std::invalid_argument.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered token strings; the id of a string is its position. The first four
// entries are always <bos>, <eos>, <unk>, <ctxpad>.
class Vocabulary {
 public:
  // Builds a vocabulary from the non-reserved entries; reserved entries are
  // prepended. Duplicates are an error.
  static Vocabulary FromWords(const std::vector<std::string>& words);
  // Full entry list, reserved literals included.
  static Vocabulary FromEntries(std::vector<std::string> entries);

  static Vocabulary Load(const std::string& path);
  void Save(const std::string& path) const;

  std::size_t size() const { return entries_.size(); }
  const std::string& token(TokenId id) const { return entries_.at(id); }
  const std::vector<std::string>& entries() const { return entries_; }
  // Returns kUnk for unknown strings.
  TokenId id(std::string_view piece) const;
  bool contains(std::string_view piece) const;

 private:
  explicit Vocabulary(std::vector<std::string> entries);

  std::vector<std::string> entries_;
  std::unordered_map<std::string, TokenId> index_;
};

// Splits on whitespace; inside a whitespace-delimited chunk every ASCII
// punctuation character is its own piece and alphanumeric runs stay whole.
std::vector<std::string> SplitPieces(std::string_view text);

// No BOS/EOS are inserted. Unknown pieces map to kUnk.
TokenSequence Tokenize(std::string_view text, const Vocabulary& vocab);

// Joins token strings with single spaces.
std::string Detokenize(std::span<const TokenId> tokens,
                       const Vocabulary& vocab);

// One corpus line. `prefix` carries the prompt for prompt/completion pairs
// and generated texts; training sees prefix followed by tokens.
struct Document {
  TokenSequence tokens;
  TokenSequence prefix;
  std::optional<std::string> tag;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
  std::vector<Document> docs;

  bool empty() const { return docs.empty(); }
  std::size_t size() const { return docs.size(); }
  std::size_t TokenCount() const;
  // Throws DataError naming the offending document if an id is >= vocab_size.
  void Validate(std::size_t vocab_size) const;
};

// JSON lines: {"tokens":[...], "prefix":[...]?, "tag":"..."?}.
Corpus ReadCorpus(const std::string& path);
Corpus ParseCorpus(std::string_view jsonl);
void WriteCorpus(const Corpus& corpus, const std::string& path);
std::string SerializeCorpus(const Corpus& corpus);

// True iff `needle` occurs as a contiguous run inside `haystack`.
bool ContainsSubsequence(std::span<const TokenId> haystack,
                         std::span<const TokenId> needle);

}  // namespace wmlab

#endif  // WMLAB_CORE_H_
