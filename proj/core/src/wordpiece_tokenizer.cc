// Copyright 2026 The dxpriv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dxpriv/wordpiece_tokenizer.h"

#include <cctype>
#include <stdexcept>
#include <vector>

namespace dxpriv {
namespace {

constexpr int kMaxCharsPerWord = 100;

bool IsAsciiWhitespace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool IsAsciiPunct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

// Lowercases and splits into words; ASCII punctuation becomes its own word.
std::vector<std::string> PreSplit(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      words.push_back(current);
      current.clear();
    }
  };
  for (char raw : text) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (IsAsciiWhitespace(c)) {
      flush();
    } else if (IsAsciiPunct(c)) {
      flush();
      words.emplace_back(1, c);
    } else {
      current.push_back(c);
    }
  }
  flush();
  return words;
}

}  // namespace

TokenSequence Tokenize(std::string_view text, const EmbeddingTable& table,
                       int max_len) {
  if (max_len <= 0) throw std::invalid_argument("max_len must be positive");
  const auto unk = table.vocab().Find("[UNK]");
  if (!unk) throw std::invalid_argument("vocabulary does not contain [UNK]");
  TokenSequence out;
  for (const std::string& word : PreSplit(text)) {
    if (out.size() >= static_cast<std::size_t>(max_len)) break;
    if (word.size() > kMaxCharsPerWord) {
      out.push_back(*unk);
      continue;
    }
    std::vector<TokenId> pieces;
    std::size_t start = 0;
    bool bad = false;
    while (start < word.size()) {
      std::size_t end = word.size();
      std::optional<TokenId> match;
      while (start < end) {
        std::string candidate = start > 0 ? "##" + word.substr(start, end - start)
                                          : word.substr(start, end - start);
        match = table.vocab().Find(candidate);
        if (match) break;
        --end;
      }
      if (!match) {
        bad = true;
        break;
      }
      pieces.push_back(*match);
      start = end;
    }
    if (bad) {
      out.push_back(*unk);
    } else {
      for (TokenId piece : pieces) {
        if (out.size() >= static_cast<std::size_t>(max_len)) break;
        out.push_back(piece);
      }
    }
  }
  if (out.size() > static_cast<std::size_t>(max_len)) {
    out.resize(max_len);
  }
  return out;
}

std::string Detokenize(const TokenSequence& seq, const EmbeddingTable& table) {
  std::string out;
  for (TokenId id : seq) {
    const std::string& token = table.vocab().token(id);
    if (token.size() > 2 && token[0] == '#' && token[1] == '#' && !out.empty()) {
      out.append(token, 2, std::string::npos);
    } else {
      if (!out.empty()) out.push_back(' ');
      out.append(token);
    }
  }
  return out;
}

}  // namespace dxpriv
