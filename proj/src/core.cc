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

#include "wmlab/core.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace wmlab {
namespace {

const char* const kReservedLiterals[kNumReserved] = {"<bos>", "<eos>", "<unk>",
                                                     "<ctxpad>"};

bool IsPunct(unsigned char c) { return std::ispunct(c) != 0; }
bool IsSpace(unsigned char c) { return std::isspace(c) != 0; }

TokenSequence ReadIds(const nlohmann::json& value, const char* field,
                      std::size_t line) {
  if (!value.is_array()) {
    throw DataError("corpus line " + std::to_string(line) + ": \"" + field +
                    "\" must be an array");
  }
  TokenSequence out;
  out.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > UINT32_MAX) {
      throw DataError("corpus line " + std::to_string(line) +
                      ": token ids must be unsigned 32-bit integers");
    }
    out.push_back(v.get<TokenId>());
  }
  return out;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> entries)
    : entries_(std::move(entries)) {
  if (entries_.size() < kNumReserved) {
    throw DataError("vocabulary needs at least the four reserved entries");
  }
  for (std::size_t i = 0; i < kNumReserved; ++i) {
    if (entries_[i] != kReservedLiterals[i]) {
      throw DataError("vocabulary entry " + std::to_string(i) + " must be " +
                      kReservedLiterals[i]);
    }
  }
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i], static_cast<TokenId>(i)).second) {
      throw DataError("duplicate vocabulary entry: " + entries_[i]);
    }
  }
}

Vocabulary Vocabulary::FromWords(const std::vector<std::string>& words) {
  std::vector<std::string> entries(kReservedLiterals,
                                   kReservedLiterals + kNumReserved);
  entries.insert(entries.end(), words.begin(), words.end());
  return Vocabulary(std::move(entries));
}

Vocabulary Vocabulary::FromEntries(std::vector<std::string> entries) {
  return Vocabulary(std::move(entries));
}

Vocabulary Vocabulary::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file: " + path);
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    entries.push_back(line);
  }
  return Vocabulary(std::move(entries));
}

void Vocabulary::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file: " + path);
  for (const auto& e : entries_) out << e << '\n';
}

TokenId Vocabulary::id(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view piece) const {
  return index_.count(std::string(piece)) > 0;
}

std::vector<std::string> SplitPieces(std::string_view text) {
  std::vector<std::string> pieces;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) pieces.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (IsSpace(c)) {
      flush();
    } else if (IsPunct(c)) {
      flush();
      pieces.emplace_back(1, ch);
    } else {
      current.push_back(ch);
    }
  }
  flush();
  return pieces;
}

TokenSequence Tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSequence out;
  for (const auto& piece : SplitPieces(text)) out.push_back(vocab.id(piece));
  return out;
}

std::string Detokenize(std::span<const TokenId> tokens,
                       const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += vocab.token(tokens[i]);
  }
  return out;
}

std::size_t Corpus::TokenCount() const {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.tokens.size() + d.prefix.size();
  return n;
}

void Corpus::Validate(std::size_t vocab_size) const {
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto* seq : {&docs[i].prefix, &docs[i].tokens}) {
      for (TokenId t : *seq) {
        if (t >= vocab_size) {
          throw DataError("document " + std::to_string(i) + ": token id " +
                          std::to_string(t) + " >= vocabulary size " +
                          std::to_string(vocab_size));
        }
      }
    }
  }
}

Corpus ParseCorpus(std::string_view jsonl) {
  Corpus corpus;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("corpus line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    if (!j.is_object() || !j.contains("tokens")) {
      throw DataError("corpus line " + std::to_string(line_no) +
                      ": expected an object with \"tokens\"");
    }
    Document doc;
    doc.tokens = ReadIds(j["tokens"], "tokens", line_no);
    if (j.contains("prefix")) doc.prefix = ReadIds(j["prefix"], "prefix", line_no);
    if (j.contains("tag") && !j["tag"].is_null()) {
      if (!j["tag"].is_string()) {
        throw DataError("corpus line " + std::to_string(line_no) +
                        ": \"tag\" must be a string");
      }
      doc.tag = j["tag"].get<std::string>();
    }
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

Corpus ReadCorpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseCorpus(ss.str());
}

std::string SerializeCorpus(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus.docs) {
    nlohmann::ordered_json j;
    j["tokens"] = d.tokens;
    if (!d.prefix.empty()) j["prefix"] = d.prefix;
    if (d.tag) j["tag"] = *d.tag;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

void WriteCorpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file: " + path);
  out << SerializeCorpus(corpus);
}

bool ContainsSubsequence(std::span<const TokenId> haystack,
                         std::span<const TokenId> needle) {
  if (needle.empty()) return true;
  return std::search(haystack.begin(), haystack.end(), needle.begin(),
                     needle.end()) != haystack.end();
}

}  // namespace wmlab
