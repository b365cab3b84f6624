// Copyright 2026 The dsqueeze Authors. All Rights Reserved.
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
// =============================================================================

#include "dsqueeze/rng.h"

#include <cmath>
#include <numbers>

#include "dsqueeze/error.h"

namespace dsqueeze {
namespace {

constexpr uint32_t kPhiloxW32A = 0x9E3779B9;
constexpr uint32_t kPhiloxW32B = 0xBB67AE85;
constexpr uint32_t kPhiloxM4x32A = 0xD2511F53;
constexpr uint32_t kPhiloxM4x32B = 0xCD9E8D57;
constexpr int kPhiloxRounds = 10;
constexpr uint64_t kMaxBlocks = uint64_t{1} << 32;

inline void MulHiLo(uint32_t a, uint32_t b, uint32_t* lo, uint32_t* hi) {
  const uint64_t product = static_cast<uint64_t>(a) * b;
  *lo = static_cast<uint32_t>(product);
  *hi = static_cast<uint32_t>(product >> 32);
}

}  // namespace

std::array<uint32_t, 4> Philox4x32(std::array<uint32_t, 4> ctr,
                                   std::array<uint32_t, 2> key) {
  for (int round = 0; round < kPhiloxRounds; ++round) {
    uint32_t lo0, hi0, lo1, hi1;
    MulHiLo(kPhiloxM4x32A, ctr[0], &lo0, &hi0);
    MulHiLo(kPhiloxM4x32B, ctr[2], &lo1, &hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW32A;
    key[1] += kPhiloxW32B;
  }
  return ctr;
}

uint64_t RngStream::Bits64(uint64_t index) const {
  const uint64_t block = index >> 1;
  if (block >= kMaxBlocks) {
    throw Error(ErrorCode::kInvalidArgument, "RngStream index exhausted");
  }
  const std::array<uint32_t, 4> out = Philox4x32(
      {static_cast<uint32_t>(block), id_.iteration, id_.node,
       static_cast<uint32_t>(id_.purpose)},
      {static_cast<uint32_t>(seed_), static_cast<uint32_t>(seed_ >> 32)});
  const int half = static_cast<int>(index & 1) * 2;
  return (static_cast<uint64_t>(out[half + 1]) << 32) | out[half];
}

double RngStream::Uniform(uint64_t index) const {
  return static_cast<double>(Bits64(index) >> 11) * 0x1.0p-53;
}

std::vector<double> DrawUniform(const RngStream& stream, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = stream.Uniform(i);
  return out;
}

std::vector<double> DrawNormal(const RngStream& stream, std::size_t count) {
  RngCursor cursor(stream);
  std::vector<double> out(count);
  for (double& v : out) v = cursor.NextNormal();
  return out;
}

double RngCursor::NextNormal() {
  // 1 - u lies in (0, 1], keeping the log finite.
  const double u1 = 1.0 - NextUniform();
  const double u2 = NextUniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t RngCursor::NextIndex(uint64_t bound) {
  if (bound == 0) {
    throw Error(ErrorCode::kInvalidArgument, "NextIndex bound must be > 0");
  }
  // Multiply-shift (Lemire): the high word of bits * bound.
  __extension__ using Wide = unsigned __int128;
  const Wide wide = static_cast<Wide>(stream_.Bits64(next_++)) * bound;
  return static_cast<uint64_t>(wide >> 64);
}

}  // namespace dsqueeze
