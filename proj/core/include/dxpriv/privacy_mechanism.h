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

#ifndef DXPRIV_PRIVACY_MECHANISM_H_
#define DXPRIV_PRIVACY_MECHANISM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "dxpriv/embedding_table.h"
#include "dxpriv/rng.h"

namespace dxpriv {

// Parameters of the metric-privacy randomizer. Larger eta means smaller
// noise, weaker privacy, and stronger utility. The master seed governs all
// randomness downstream of these parameters.
struct PrivacyParams {
  double eta = 0.0;
  int dim = 0;
  std::uint64_t master_seed = 0;
};

// Throws std::invalid_argument unless eta > 0 (finite) and dim > 0.
void ValidatePrivacyParams(const PrivacyParams& params);

struct NoiseSample {
  std::vector<double> vector;
  double radius;  // Euclidean norm of vector
};

// Draws additive noise with density p(N) proportional to exp(-eta * ||N||):
// a radius from Gamma(dim, 1/eta) times a direction sampled uniformly on the
// unit hypersphere (normalized standard normals, resampled on a zero draw).
// The draw is fully determined by (params.master_seed, stream).
NoiseSample SampleNoise(const PrivacyParams& params, const StreamKey& stream);

// Token representation privatization: x + N. Input width must equal
// params.dim and be finite.
std::vector<double> PerturbEmbedding(std::span<const double> x,
                                     const PrivacyParams& params,
                                     const StreamKey& stream);
std::vector<double> PerturbEmbedding(std::span<const float> x,
                                     const PrivacyParams& params,
                                     const StreamKey& stream);

// Text-to-text privatization of one token: exactly one noise draw on the
// token's embedding followed by one nearest-neighbor search over the
// candidate set. Special tokens are never privatized; passing one throws.
TokenId PrivatizeToken(TokenId id, const EmbeddingTable& table,
                       const PrivacyParams& params, const StreamKey& stream,
                       CandidateSet candidates = CandidateSet::kRegularOnly);

// Where privatization is applied in a data flow: not at all, on token
// embeddings (representation), or on tokens themselves (text-to-text).
enum class PrivatizationMode { kNone, kRepresentation, kText };

// Per-token independent privatization of a sequence. Position i draws from
// stream (context, item_base + i, trial); special tokens pass through
// unmodified. An empty sequence yields an empty output.
TokenSequence PrivatizeSequenceText(const TokenSequence& seq,
                                    const EmbeddingTable& table,
                                    const PrivacyParams& params,
                                    StreamContext context, std::uint64_t item_base,
                                    std::uint64_t trial,
                                    CandidateSet candidates = CandidateSet::kRegularOnly);

// Representation-mode sequence privatization: perturbed embedding per
// regular token, raw embedding per special token.
std::vector<std::vector<double>> PrivatizeSequenceRepresentation(
    const TokenSequence& seq, const EmbeddingTable& table,
    const PrivacyParams& params, StreamContext context, std::uint64_t item_base,
    std::uint64_t trial);

// Sum of per-position Euclidean embedding distances between two sequences
// of equal length.
double SequenceDistance(const TokenSequence& a, const TokenSequence& b,
                        const EmbeddingTable& table);

// Corpus-scale text-to-text privatization using the blocked batched search.
// Line i position p draws from stream (kPrivatizeCorpus, item = p, trial = i),
// so results are identical to per-token privatization in any order.
std::vector<TokenSequence> PrivatizeCorpusText(
    const std::vector<TokenSequence>& corpus, const EmbeddingTable& table,
    const PrivacyParams& params,
    CandidateSet candidates = CandidateSet::kRegularOnly, int workers = 0);

}  // namespace dxpriv

#endif  // DXPRIV_PRIVACY_MECHANISM_H_
