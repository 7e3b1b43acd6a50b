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

#ifndef DXPRIV_EMBEDDING_TABLE_H_
#define DXPRIV_EMBEDDING_TABLE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dxpriv {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

enum class TableFormat { kText, kBinary };

// Candidate pool for nearest-neighbor queries. Regular-only excludes the
// special tokens ([PAD], [CLS], [SEP], [MASK], [UNK], [unused<digits>]),
// which are never valid privatization outputs by default.
enum class CandidateSet { kAll, kRegularOnly };

class Vocabulary {
 public:
  // Throws std::invalid_argument on duplicate token strings.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> Find(std::string_view token) const;
  bool IsSpecial(TokenId id) const;

  // True for the exact strings [PAD], [CLS], [SEP], [MASK], [UNK] and for
  // [unused<digits>] placeholders.
  static bool IsSpecialToken(std::string_view token);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint8_t> special_;
  std::unordered_map<std::string, TokenId> index_;
};

struct Neighbor {
  TokenId id;
  double distance;
};

// Options for the blocked batched search; exposed so tests can vary the
// tiling. Results must not depend on any of these values.
struct BatchedNearestOptions {
  int workers = 0;         // 0 = hardware concurrency
  int query_block = 32;
  int candidate_block = 256;
};

// Immutable token-embedding matrix: the map from token ids to R^dim rows
// and the metric space all privatization operates in. Rows are stored as
// 32-bit floats; distance arithmetic accumulates in double precision.
// All queries are read-only and safe to run concurrently.
class EmbeddingTable {
 public:
  // Throws std::invalid_argument on size mismatch or non-finite entries.
  EmbeddingTable(Vocabulary vocab, std::vector<float> row_major, int dim);

  static EmbeddingTable Load(const std::string& path, TableFormat format);
  void Save(const std::string& path, TableFormat format) const;

  std::size_t size() const { return vocab_.size(); }
  int dim() const { return dim_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::size_t regular_count() const { return regular_ids_.size(); }
  const std::vector<TokenId>& regular_ids() const { return regular_ids_; }

  // The stored row for a token. Throws std::out_of_range on invalid ids.
  std::span<const float> Row(TokenId id) const;

  // Cached squared Euclidean norm of the row.
  double SquaredNorm(TokenId id) const;

  // Argmin of Euclidean distance over the candidate set; ties break toward
  // the lowest token id. Throws on dimension mismatch, non-finite queries,
  // or an empty candidate set.
  TokenId NearestToken(std::span<const double> query, CandidateSet candidates) const;

  // Exact k nearest neighbors of a stored token, ascending (distance, id),
  // excluding the token itself. Requires 1 <= k <= candidate count.
  std::vector<Neighbor> Knn(TokenId id, int k,
                            CandidateSet candidates = CandidateSet::kAll) const;

  // Element-wise identical to NearestToken applied per row, computed with a
  // blocked ||x-y||^2 = ||x||^2 - 2xy + ||y||^2 kernel over cached norms.
  // `queries` is row-major with `count` rows of width dim().
  std::vector<TokenId> BatchedNearest(std::span<const double> queries, std::size_t count,
                                      CandidateSet candidates, int workers = 0) const;
  std::vector<TokenId> BatchedNearest(std::span<const double> queries, std::size_t count,
                                      CandidateSet candidates,
                                      const BatchedNearestOptions& options) const;

 private:
  std::span<const TokenId> CandidateIds(CandidateSet candidates) const;

  Vocabulary vocab_;
  int dim_;
  std::vector<float> data_;             // row-major |V| x dim
  std::vector<double> squared_norms_;   // per-row, double accumulation
  std::vector<TokenId> all_ids_;
  std::vector<TokenId> regular_ids_;
};

}  // namespace dxpriv

#endif  // DXPRIV_EMBEDDING_TABLE_H_
