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

#include "dxpriv/rng.h"

#include <cmath>

namespace dxpriv {
namespace {

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73Bull;

inline void MulHiLo(std::uint64_t a, std::uint64_t b, std::uint64_t* hi,
                    std::uint64_t* lo) {
  const unsigned __int128 product =
      static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
  *hi = static_cast<std::uint64_t>(product >> 64);
  *lo = static_cast<std::uint64_t>(product);
}

}  // namespace

std::array<std::uint64_t, 4> PhiloxBlock(const std::array<std::uint64_t, 2>& key,
                                         const std::array<std::uint64_t, 4>& counter) {
  std::uint64_t k0 = key[0];
  std::uint64_t k1 = key[1];
  std::array<std::uint64_t, 4> x = counter;
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    MulHiLo(kPhiloxM0, x[0], &hi0, &lo0);
    MulHiLo(kPhiloxM1, x[2], &hi1, &lo1);
    x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return x;
}

StreamRng::StreamRng(std::uint64_t master_seed, const StreamKey& key)
    : key_{master_seed, key.context},
      counter_{key.item, key.trial, 0, 0},
      word_index_(4),
      cached_gaussian_(0.0),
      has_cached_gaussian_(false) {}

StreamRng::StreamRng(std::uint64_t master_seed, StreamContext context,
                     std::uint64_t item, std::uint64_t trial)
    : StreamRng(master_seed,
                StreamKey{static_cast<std::uint64_t>(context), item, trial}) {}

void StreamRng::Refill() {
  block_ = PhiloxBlock(key_, counter_);
  ++counter_[2];  // block index; item and trial words stay fixed
  word_index_ = 0;
}

std::uint64_t StreamRng::NextU64() {
  if (word_index_ >= 4) Refill();
  return block_[word_index_++];
}

double StreamRng::NextUnit() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double StreamRng::NextGaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  // 1 - u lies in (0, 1], keeping the log finite.
  const double u1 = 1.0 - NextUnit();
  const double u2 = NextUnit();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  cached_gaussian_ = radius * std::sin(angle);
  has_cached_gaussian_ = true;
  return radius * std::cos(angle);
}

double StreamRng::NextGamma(double shape, double scale) {
  // Marsaglia & Tsang (2000), valid for shape >= 1.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = NextGaussian();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = NextUnit();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
  }
}

}  // namespace dxpriv
