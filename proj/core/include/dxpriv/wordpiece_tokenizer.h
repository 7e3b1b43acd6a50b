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

#ifndef DXPRIV_WORDPIECE_TOKENIZER_H_
#define DXPRIV_WORDPIECE_TOKENIZER_H_

#include <string>
#include <string_view>

#include "dxpriv/embedding_table.h"

namespace dxpriv {

// Maps raw text to token ids against the table's vocabulary: lowercase,
// split on whitespace and punctuation, then greedy longest-match wordpiece
// with the "##" continuation prefix. Words with no matching piece (or longer
// than 100 characters) become [UNK]. Output is truncated to max_len.
// Requires the vocabulary to contain [UNK].
TokenSequence Tokenize(std::string_view text, const EmbeddingTable& table,
                       int max_len);

// Joins tokens with spaces, fusing "##"-prefixed continuations onto the
// previous token.
std::string Detokenize(const TokenSequence& seq, const EmbeddingTable& table);

}  // namespace dxpriv

#endif  // DXPRIV_WORDPIECE_TOKENIZER_H_
