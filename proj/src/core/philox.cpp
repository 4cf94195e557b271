// Copyright 2026 The geodephase Authors
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

#include "philox.hpp"

#include <cmath>
#include <numbers>

namespace geodephase::noise {
namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void MulHiLo(std::uint32_t a, std::uint32_t b, std::uint32_t* hi,
                    std::uint32_t* lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  *hi = static_cast<std::uint32_t>(p >> 32);
  *lo = static_cast<std::uint32_t>(p);
}

// 53-bit mantissa from two words, mapped to (0, 1].
inline double ToUnit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Block Philox4x32::Generate(Block c, Key k) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kW0;
      k[1] += kW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    MulHiLo(kM0, c[0], &hi0, &lo0);
    MulHiLo(kM1, c[2], &hi1, &lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

NormalStream::NormalStream(const StreamId& id) : id_(id) {}

void NormalStream::Refill() {
  const Philox4x32::Block ctr = {static_cast<std::uint32_t>(block_),
                                 static_cast<std::uint32_t>(block_ >> 32),
                                 id_.realization, id_.stream};
  const Philox4x32::Key key = {static_cast<std::uint32_t>(id_.seed),
                               static_cast<std::uint32_t>(id_.seed >> 32)};
  ++block_;
  const Philox4x32::Block r = Philox4x32::Generate(ctr, key);
  const double u1 = ToUnit(r[0], r[1]);
  const double u2 = ToUnit(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  cache_[0] = rad * std::cos(ang);
  cache_[1] = rad * std::sin(ang);
  cached_ = 2;
}

double NormalStream::Next() {
  if (cached_ == 0) Refill();
  return cache_[2 - cached_--];
}

double NormalStream::NextUniform() {
  const Philox4x32::Block ctr = {static_cast<std::uint32_t>(block_),
                                 static_cast<std::uint32_t>(block_ >> 32),
                                 id_.realization, id_.stream};
  const Philox4x32::Key key = {static_cast<std::uint32_t>(id_.seed),
                               static_cast<std::uint32_t>(id_.seed >> 32)};
  ++block_;
  const Philox4x32::Block r = Philox4x32::Generate(ctr, key);
  return ToUnit(r[0], r[1]);
}

}  // namespace geodephase::noise
