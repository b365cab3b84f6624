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

#ifndef DSQUEEZE_COMPRESSOR_H_
#define DSQUEEZE_COMPRESSOR_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dsqueeze/dense_vector.h"
#include "dsqueeze/rng.h"

namespace dsqueeze {

enum class CompressorKind : uint8_t {
  kIdentity = 0,
  kOneBit = 1,
  kTopK = 2,
  kTernary = 3,
  kRandomQuantize = 4,
  kRandomSparsify = 5,
  kClip = 6,
};

// norm_ratio: s = ||v|| / ||code||. max_abs: s = max_j |v_j|, unbiased.
enum class TernaryScale : uint8_t { kNormRatio = 0, kMaxAbs = 1 };

// kBinary zeroes low mantissa bits; kDecimal truncates to one decimal place.
enum class ClipMode : uint8_t { kBinary = 0, kDecimal = 1 };

std::string_view CompressorKindName(CompressorKind kind);
std::optional<CompressorKind> ParseCompressorKind(std::string_view name);

struct CompressorSpec {
  CompressorKind kind = CompressorKind::kIdentity;
  int64_t k = 1;                 // top_k
  int levels = 2;                // random_quantize
  double keep_prob = 1.0;        // random_sparsify
  int mantissa_bits_zeroed = 0;  // clip
  ClipMode clip_mode = ClipMode::kBinary;
  TernaryScale scale_mode = TernaryScale::kMaxAbs;

  static CompressorSpec Identity() { return {}; }
  static CompressorSpec OneBit();
  static CompressorSpec TopK(int64_t k);
  static CompressorSpec Ternary(TernaryScale mode);
  static CompressorSpec RandomQuantize(int levels);
  static CompressorSpec RandomSparsify(double keep_prob);
  static CompressorSpec Clip(int mantissa_bits_zeroed,
                             ClipMode mode = ClipMode::kBinary);

  // Throws Error(kInvalidArgument) when a parameter is out of range.
  void Validate() const;
  std::string ToString() const;

  bool operator==(const CompressorSpec&) const = default;
};

// Payloads. Reals are held at full precision in memory; the wire size is
// what BitCost reports.
struct DensePayload {
  std::vector<double> values;
};
struct SignPayload {
  std::vector<bool> negative;  // sign(0) = +1
  double scale = 0.0;
};
struct SparsePayload {
  std::vector<uint32_t> indices;  // strictly ascending
  std::vector<double> values;
};
struct TernaryPayload {
  std::vector<int8_t> codes;  // each in {-1, 0, +1}
  double scale = 0.0;
};
struct GridPayload {
  std::vector<uint32_t> codes;  // each < levels
  double lo = 0.0;
  double hi = 0.0;
};

using Payload = std::variant<DensePayload, SignPayload, SparsePayload,
                             TernaryPayload, GridPayload>;

struct CompressedMessage {
  CompressorSpec spec;
  std::size_t dim = 0;
  Payload payload;
};

CompressedMessage Compress(const CompressorSpec& spec, const DenseVector& v,
                           const RngStream& rng);
DenseVector Reconstruct(const CompressedMessage& msg);

CompressedMessage OneBitQuantize(const DenseVector& v);
CompressedMessage TopKSparsify(const DenseVector& v, int64_t k);
CompressedMessage TernaryQuantize(const DenseVector& v, TernaryScale mode,
                                  const RngStream& rng);
CompressedMessage RandomizedQuantize(const DenseVector& v, int levels,
                                     const RngStream& rng);
CompressedMessage RandomSparsify(const DenseVector& v, double keep_prob,
                                 const RngStream& rng);
CompressedMessage ClipLowBits(const DenseVector& v, int mantissa_bits_zeroed,
                              ClipMode mode = ClipMode::kBinary);

// Bits per real for dense (uncompressed) messages. Compressed payloads use
// fixed 32-bit reals regardless.
inline constexpr int kInternalBitsPerReal = 64;

// Exact payload bits:
//   identity        dim * wire_bits_per_real
//   one_bit         dim + 32
//   top_k           min(k, dim) * (32 + ceil(log2 dim))
//   ternary         2 * dim + 32
//   random_quantize dim * ceil(log2 levels) + 64
//   random_sparsify kept * (32 + ceil(log2 dim))
//   clip (binary)   dim * (64 - m)
//   clip (decimal)  dim * 64
int64_t BitCost(const CompressedMessage& msg,
                int wire_bits_per_real = kInternalBitsPerReal);

// Cost of a message of this kind and dimension without building it. Empty
// for random_sparsify, whose cost depends on the realized kept count.
std::optional<int64_t> PlannedBitCost(
    const CompressorSpec& spec, std::size_t dim,
    int wire_bits_per_real = kInternalBitsPerReal);

int CeilLog2(uint64_t x);

// Canonical byte form: a fixed header followed by the payload bitstream,
// whose length in bits is exactly BitCost(msg, wire_bits_per_real). Reals
// narrower than 64 bits are narrowed to float32, so round trips through a
// 32-bit encoding are lossy on real-valued fields.
//
// Header (little endian): u8 kind, u8 wire_bits, u8 clip_mode,
// u8 scale_mode, u32 levels, u32 mantissa_bits_zeroed, u64 dim,
// u64 k, f64 keep_prob, u64 payload_bits.
inline constexpr std::size_t kSerializedHeaderBytes = 44;

std::vector<uint8_t> Serialize(const CompressedMessage& msg,
                               int wire_bits_per_real = kInternalBitsPerReal);
CompressedMessage Deserialize(const std::vector<uint8_t>& bytes);

}  // namespace dsqueeze

#endif  // DSQUEEZE_COMPRESSOR_H_
