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

#ifndef DXPRIV_RNG_H_
#define DXPRIV_RNG_H_

#include <array>
#include <cstdint>

namespace dxpriv {

// Purpose tag for a random stream. Every consumer of randomness in the
// library draws from its own context so that streams never collide and
// results stay reproducible under any parallel schedule.
enum class StreamContext : std::uint64_t {
  kNoiseCalibration = 1,
  kPrivatizeCorpus = 2,
  kDeniability = 3,
  kInversion = 4,
  kPerturbationExamples = 5,
  kGeometryNoise = 6,
  kMaskSelection = 7,
  kMlmContext = 8,
  kMlmTarget = 9,
  kProbeTrainNoise = 10,
  kProbeEvalNoise = 11,
  kTesting = 1000,
};

// Identity of one logical random stream. Streams with equal
// (master_seed, context, item, trial) produce bit-identical draw sequences;
// distinct identities behave as independent generators.
struct StreamKey {
  std::uint64_t context = 0;
  std::uint64_t item = 0;
  std::uint64_t trial = 0;
};

inline std::uint64_t PackItem(std::uint64_t major, std::uint64_t minor) {
  return (major << 32) | (minor & 0xFFFFFFFFull);
}

// Philox4x64-10 block function (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3"). The 128-bit key carries (master_seed, context) and
// the 256-bit counter carries (item, trial, block, 0), so every stream
// identity selects a disjoint slice of the generator's output space.
std::array<std::uint64_t, 4> PhiloxBlock(const std::array<std::uint64_t, 2>& key,
                                         const std::array<std::uint64_t, 4>& counter);

// Deterministic counter-based random stream with the standard scalar
// distributions the privacy mechanism needs. Instances are cheap to create;
// make one per (item, trial) work unit rather than sharing across threads.
class StreamRng {
 public:
  StreamRng(std::uint64_t master_seed, const StreamKey& key);
  StreamRng(std::uint64_t master_seed, StreamContext context, std::uint64_t item,
            std::uint64_t trial = 0);

  std::uint64_t NextU64();

  // Uniform on [0, 1) with 53 random bits.
  double NextUnit();

  // Standard normal via Box-Muller; pairs are cached within the stream.
  double NextGaussian();

  // Gamma(shape, scale) by Marsaglia-Tsang squeeze rejection; requires
  // shape >= 1, which holds for every use in this library (shape = dim).
  double NextGamma(double shape, double scale);

 private:
  void Refill();

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_;
  std::array<std::uint64_t, 4> block_;
  int word_index_;
  double cached_gaussian_;
  bool has_cached_gaussian_;
};

}  // namespace dxpriv

#endif  // DXPRIV_RNG_H_
