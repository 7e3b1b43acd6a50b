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

#include "dxpriv/privacy_mechanism.h"

#include <cmath>
#include <stdexcept>

#include "dxpriv/parallel.h"

namespace dxpriv {

void ValidatePrivacyParams(const PrivacyParams& params) {
  if (!(params.eta > 0.0) || !std::isfinite(params.eta)) {
    throw std::invalid_argument("eta must be a positive finite value");
  }
  if (params.dim <= 0) {
    throw std::invalid_argument("dimension must be positive");
  }
}

NoiseSample SampleNoise(const PrivacyParams& params, const StreamKey& stream) {
  ValidatePrivacyParams(params);
  StreamRng rng(params.master_seed, stream);
  const int n = params.dim;
  NoiseSample sample;
  sample.vector.resize(n);
  // Direction first, then radius; the order is part of the stream contract.
  double norm_sq = 0.0;
  do {
    norm_sq = 0.0;
    for (int d = 0; d < n; ++d) {
      const double g = rng.NextGaussian();
      sample.vector[d] = g;
      norm_sq += g * g;
    }
  } while (norm_sq == 0.0);
  const double radius = rng.NextGamma(static_cast<double>(n), 1.0 / params.eta);
  const double scale = radius / std::sqrt(norm_sq);
  for (int d = 0; d < n; ++d) sample.vector[d] *= scale;
  sample.radius = radius;
  return sample;
}

namespace {

template <typename T>
std::vector<double> PerturbImpl(std::span<const T> x, const PrivacyParams& params,
                                const StreamKey& stream) {
  if (x.size() != static_cast<std::size_t>(params.dim)) {
    throw std::invalid_argument("input width " + std::to_string(x.size()) +
                                " does not match dimension " +
                                std::to_string(params.dim));
  }
  for (T v : x) {
    if (!std::isfinite(static_cast<double>(v))) {
      throw std::invalid_argument("non-finite input component");
    }
  }
  NoiseSample noise = SampleNoise(params, stream);
  for (std::size_t d = 0; d < x.size(); ++d) {
    noise.vector[d] += static_cast<double>(x[d]);
  }
  return std::move(noise.vector);
}

}  // namespace

std::vector<double> PerturbEmbedding(std::span<const double> x,
                                     const PrivacyParams& params,
                                     const StreamKey& stream) {
  return PerturbImpl(x, params, stream);
}

std::vector<double> PerturbEmbedding(std::span<const float> x,
                                     const PrivacyParams& params,
                                     const StreamKey& stream) {
  return PerturbImpl(x, params, stream);
}

TokenId PrivatizeToken(TokenId id, const EmbeddingTable& table,
                       const PrivacyParams& params, const StreamKey& stream,
                       CandidateSet candidates) {
  if (params.dim != table.dim()) {
    throw std::invalid_argument("params.dim does not match table dimension");
  }
  if (table.vocab().IsSpecial(id)) {
    throw std::invalid_argument("special token \"" + table.vocab().token(id) +
                                "\" cannot be privatized");
  }
  const std::vector<double> perturbed = PerturbEmbedding(table.Row(id), params, stream);
  return table.NearestToken(perturbed, candidates);
}

TokenSequence PrivatizeSequenceText(const TokenSequence& seq,
                                    const EmbeddingTable& table,
                                    const PrivacyParams& params,
                                    StreamContext context, std::uint64_t item_base,
                                    std::uint64_t trial, CandidateSet candidates) {
  TokenSequence out;
  out.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (table.vocab().IsSpecial(seq[i])) {
      out.push_back(seq[i]);
    } else {
      out.push_back(PrivatizeToken(
          seq[i], table, params,
          StreamKey{static_cast<std::uint64_t>(context), item_base + i, trial},
          candidates));
    }
  }
  return out;
}

std::vector<std::vector<double>> PrivatizeSequenceRepresentation(
    const TokenSequence& seq, const EmbeddingTable& table,
    const PrivacyParams& params, StreamContext context, std::uint64_t item_base,
    std::uint64_t trial) {
  if (params.dim != table.dim()) {
    throw std::invalid_argument("params.dim does not match table dimension");
  }
  std::vector<std::vector<double>> out;
  out.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto row = table.Row(seq[i]);
    if (table.vocab().IsSpecial(seq[i])) {
      out.emplace_back(row.begin(), row.end());
    } else {
      out.push_back(PerturbEmbedding(
          row, params,
          StreamKey{static_cast<std::uint64_t>(context), item_base + i, trial}));
    }
  }
  return out;
}

double SequenceDistance(const TokenSequence& a, const TokenSequence& b,
                        const EmbeddingTable& table) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("sequence lengths differ: " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto ra = table.Row(a[i]);
    const auto rb = table.Row(b[i]);
    double sq = 0.0;
    for (int d = 0; d < table.dim(); ++d) {
      const double diff = static_cast<double>(ra[d]) - static_cast<double>(rb[d]);
      sq += diff * diff;
    }
    total += std::sqrt(sq);
  }
  return total;
}

std::vector<TokenSequence> PrivatizeCorpusText(
    const std::vector<TokenSequence>& corpus, const EmbeddingTable& table,
    const PrivacyParams& params, CandidateSet candidates, int workers) {
  if (params.dim != table.dim()) {
    throw std::invalid_argument("params.dim does not match table dimension");
  }
  ValidatePrivacyParams(params);
  std::vector<TokenSequence> out = corpus;

  struct Slot {
    std::uint32_t line;
    std::uint32_t pos;
  };
  // Process in fixed-size chunks of regular-token occurrences so corpus size
  // does not drive peak memory. Stream identities depend only on (line, pos),
  // so chunk boundaries cannot change results.
  constexpr std::size_t kChunkTokens = 1 << 16;
  std::vector<Slot> slots;
  std::vector<double> queries;
  slots.reserve(kChunkTokens);

  std::size_t line = 0, pos = 0;
  auto flush = [&] {
    if (slots.empty()) return;
    queries.assign(slots.size() * table.dim(), 0.0);
    ParallelFor(slots.size(), workers, [&](std::size_t s) {
      const Slot slot = slots[s];
      const TokenId id = corpus[slot.line][slot.pos];
      const std::vector<double> perturbed = PerturbEmbedding(
          table.Row(id), params,
          StreamKey{static_cast<std::uint64_t>(StreamContext::kPrivatizeCorpus),
                    slot.pos, slot.line});
      std::copy(perturbed.begin(), perturbed.end(),
                queries.begin() + s * table.dim());
    });
    const std::vector<TokenId> nearest =
        table.BatchedNearest(queries, slots.size(), candidates, workers);
    for (std::size_t s = 0; s < slots.size(); ++s) {
      out[slots[s].line][slots[s].pos] = nearest[s];
    }
    slots.clear();
  };

  for (line = 0; line < corpus.size(); ++line) {
    for (pos = 0; pos < corpus[line].size(); ++pos) {
      if (!table.vocab().IsSpecial(corpus[line][pos])) {
        slots.push_back({static_cast<std::uint32_t>(line),
                         static_cast<std::uint32_t>(pos)});
        if (slots.size() >= kChunkTokens) flush();
      }
    }
  }
  flush();
  return out;
}

}  // namespace dxpriv
