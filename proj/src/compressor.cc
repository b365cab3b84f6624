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

#include "dsqueeze/compressor.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dsqueeze/error.h"

namespace dsqueeze {
namespace {

constexpr int kScaleBits = 32;
constexpr int kValueBits = 32;

[[noreturn]] void Malformed(const std::string& what) {
  throw Error(ErrorCode::kMalformedMessage, what);
}

CompressedMessage MakeMessage(const CompressorSpec& spec, std::size_t dim,
                              Payload payload) {
  return CompressedMessage{spec, dim, std::move(payload)};
}

int64_t SparseEntryBits(std::size_t dim) {
  return kValueBits + CeilLog2(dim);
}

}  // namespace

std::string_view CompressorKindName(CompressorKind kind) {
  switch (kind) {
    case CompressorKind::kIdentity:
      return "identity";
    case CompressorKind::kOneBit:
      return "one_bit";
    case CompressorKind::kTopK:
      return "top_k";
    case CompressorKind::kTernary:
      return "ternary";
    case CompressorKind::kRandomQuantize:
      return "random_quantize";
    case CompressorKind::kRandomSparsify:
      return "random_sparsify";
    case CompressorKind::kClip:
      return "clip";
  }
  return "unknown";
}

std::optional<CompressorKind> ParseCompressorKind(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(CompressorKind::kClip); ++i) {
    const auto kind = static_cast<CompressorKind>(i);
    if (CompressorKindName(kind) == name) return kind;
  }
  return std::nullopt;
}

CompressorSpec CompressorSpec::OneBit() {
  CompressorSpec spec;
  spec.kind = CompressorKind::kOneBit;
  return spec;
}

CompressorSpec CompressorSpec::TopK(int64_t k) {
  CompressorSpec spec;
  spec.kind = CompressorKind::kTopK;
  spec.k = k;
  return spec;
}

CompressorSpec CompressorSpec::Ternary(TernaryScale mode) {
  CompressorSpec spec;
  spec.kind = CompressorKind::kTernary;
  spec.scale_mode = mode;
  return spec;
}

CompressorSpec CompressorSpec::RandomQuantize(int levels) {
  CompressorSpec spec;
  spec.kind = CompressorKind::kRandomQuantize;
  spec.levels = levels;
  return spec;
}

CompressorSpec CompressorSpec::RandomSparsify(double keep_prob) {
  CompressorSpec spec;
  spec.kind = CompressorKind::kRandomSparsify;
  spec.keep_prob = keep_prob;
  return spec;
}

CompressorSpec CompressorSpec::Clip(int mantissa_bits_zeroed, ClipMode mode) {
  CompressorSpec spec;
  spec.kind = CompressorKind::kClip;
  spec.mantissa_bits_zeroed = mantissa_bits_zeroed;
  spec.clip_mode = mode;
  return spec;
}

void CompressorSpec::Validate() const {
  auto fail = [this](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(CompressorKindName(kind)) + ": " + what);
  };
  switch (kind) {
    case CompressorKind::kTopK:
      if (k < 1) fail("k must be >= 1, got " + std::to_string(k));
      break;
    case CompressorKind::kRandomQuantize:
      if (levels < 2) fail("levels must be >= 2");
      break;
    case CompressorKind::kRandomSparsify:
      if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
        fail("keep_prob must lie in (0, 1]");
      }
      break;
    case CompressorKind::kClip:
      if (mantissa_bits_zeroed < 0 || mantissa_bits_zeroed > 52) {
        fail("mantissa_bits_zeroed must lie in [0, 52]");
      }
      break;
    default:
      break;
  }
}

std::string CompressorSpec::ToString() const {
  std::ostringstream out;
  out << CompressorKindName(kind);
  switch (kind) {
    case CompressorKind::kTopK:
      out << "(k=" << k << ")";
      break;
    case CompressorKind::kTernary:
      out << (scale_mode == TernaryScale::kMaxAbs ? "(max_abs)"
                                                  : "(norm_ratio)");
      break;
    case CompressorKind::kRandomQuantize:
      out << "(levels=" << levels << ")";
      break;
    case CompressorKind::kRandomSparsify:
      out << "(p=" << keep_prob << ")";
      break;
    case CompressorKind::kClip:
      if (clip_mode == ClipMode::kDecimal) {
        out << "(decimal)";
      } else {
        out << "(m=" << mantissa_bits_zeroed << ")";
      }
      break;
    default:
      break;
  }
  return out.str();
}

int CeilLog2(uint64_t x) {
  if (x <= 1) return 0;
  return 64 - std::countl_zero(x - 1);
}

CompressedMessage OneBitQuantize(const DenseVector& v) {
  SignPayload payload;
  payload.negative.resize(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) payload.negative[i] = v[i] < 0.0;
  // sign(0) = +1, so ||sign(v)|| = sqrt(dim) for every input.
  payload.scale = L2Norm(v) / std::sqrt(static_cast<double>(v.dim()));
  return MakeMessage(CompressorSpec::OneBit(), v.dim(), std::move(payload));
}

CompressedMessage TopKSparsify(const DenseVector& v, int64_t k) {
  const CompressorSpec spec = CompressorSpec::TopK(k);
  spec.Validate();
  const std::size_t keep =
      std::min<std::size_t>(static_cast<std::size_t>(k), v.dim());
  std::vector<uint32_t> order(v.dim());
  std::iota(order.begin(), order.end(), 0u);
  // Larger magnitude first; equal magnitudes resolve to the lower index.
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&v](uint32_t a, uint32_t b) {
                      const double ma = std::abs(v[a]);
                      const double mb = std::abs(v[b]);
                      return ma > mb || (ma == mb && a < b);
                    });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  SparsePayload payload;
  payload.indices = order;
  payload.values.reserve(keep);
  for (uint32_t idx : order) payload.values.push_back(v[idx]);
  return MakeMessage(spec, v.dim(), std::move(payload));
}

CompressedMessage TernaryQuantize(const DenseVector& v, TernaryScale mode,
                                  const RngStream& rng) {
  TernaryPayload payload;
  payload.codes.assign(v.dim(), 0);
  double max_abs = 0.0;
  for (double x : v.values()) max_abs = std::max(max_abs, std::abs(x));
  if (max_abs > 0.0) {
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < v.dim(); ++i) {
      const double prob = std::abs(v[i]) / max_abs;
      if (rng.Uniform(i) < prob) {
        payload.codes[i] = v[i] < 0.0 ? -1 : 1;
        ++nonzero;
      }
    }
    if (mode == TernaryScale::kMaxAbs) {
      payload.scale = max_abs;
    } else {
      payload.scale = L2Norm(v) / std::sqrt(static_cast<double>(nonzero));
    }
  }
  return MakeMessage(CompressorSpec::Ternary(mode), v.dim(),
                     std::move(payload));
}

CompressedMessage RandomizedQuantize(const DenseVector& v, int levels,
                                     const RngStream& rng) {
  const CompressorSpec spec = CompressorSpec::RandomQuantize(levels);
  spec.Validate();
  GridPayload payload;
  const auto [lo_it, hi_it] = std::minmax_element(v.values().begin(),
                                                  v.values().end());
  payload.lo = *lo_it;
  payload.hi = *hi_it;
  payload.codes.assign(v.dim(), 0);
  if (payload.hi > payload.lo) {
    const double intervals = static_cast<double>(levels - 1);
    const double width = payload.hi - payload.lo;
    for (std::size_t i = 0; i < v.dim(); ++i) {
      const double pos = (v[i] - payload.lo) / width * intervals;
      const auto below = std::min<uint32_t>(static_cast<uint32_t>(pos),
                                            static_cast<uint32_t>(levels - 2));
      const double frac = pos - below;
      payload.codes[i] = rng.Uniform(i) < frac ? below + 1 : below;
    }
  }
  return MakeMessage(spec, v.dim(), std::move(payload));
}

CompressedMessage RandomSparsify(const DenseVector& v, double keep_prob,
                                 const RngStream& rng) {
  const CompressorSpec spec = CompressorSpec::RandomSparsify(keep_prob);
  spec.Validate();
  SparsePayload payload;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    if (rng.Uniform(i) < keep_prob) {
      payload.indices.push_back(static_cast<uint32_t>(i));
      payload.values.push_back(v[i] / keep_prob);
    }
  }
  return MakeMessage(spec, v.dim(), std::move(payload));
}

CompressedMessage ClipLowBits(const DenseVector& v, int mantissa_bits_zeroed,
                              ClipMode mode) {
  const CompressorSpec spec = CompressorSpec::Clip(mantissa_bits_zeroed, mode);
  spec.Validate();
  DensePayload payload;
  payload.values.reserve(v.dim());
  if (mode == ClipMode::kDecimal) {
    for (double x : v.values()) payload.values.push_back(std::trunc(x * 10.0) / 10.0);
  } else {
    const uint64_t mask =
        ~((uint64_t{1} << mantissa_bits_zeroed) - 1);
    for (double x : v.values()) {
      payload.values.push_back(
          std::bit_cast<double>(std::bit_cast<uint64_t>(x) & mask));
    }
  }
  return MakeMessage(spec, v.dim(), std::move(payload));
}

CompressedMessage Compress(const CompressorSpec& spec, const DenseVector& v,
                           const RngStream& rng) {
  spec.Validate();
  if (v.dim() > (uint64_t{1} << 32)) {
    throw Error(ErrorCode::kInvalidArgument,
                "dimension exceeds 32-bit index space");
  }
  switch (spec.kind) {
    case CompressorKind::kIdentity:
      return MakeMessage(spec, v.dim(), DensePayload{v.ToStdVector()});
    case CompressorKind::kOneBit:
      return OneBitQuantize(v);
    case CompressorKind::kTopK:
      return TopKSparsify(v, spec.k);
    case CompressorKind::kTernary:
      return TernaryQuantize(v, spec.scale_mode, rng);
    case CompressorKind::kRandomQuantize:
      return RandomizedQuantize(v, spec.levels, rng);
    case CompressorKind::kRandomSparsify:
      return RandomSparsify(v, spec.keep_prob, rng);
    case CompressorKind::kClip:
      return ClipLowBits(v, spec.mantissa_bits_zeroed, spec.clip_mode);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown compressor kind");
}

namespace {

template <typename T>
const T& PayloadAs(const CompressedMessage& msg) {
  const T* p = std::get_if<T>(&msg.payload);
  if (p == nullptr) {
    Malformed(std::string(CompressorKindName(msg.spec.kind)) +
              ": payload type does not match kind");
  }
  return *p;
}

void CheckSparse(const SparsePayload& p, std::size_t dim,
                 std::size_t expected_count, bool check_count) {
  if (p.indices.size() != p.values.size()) {
    Malformed("sparse payload index/value count mismatch");
  }
  if (check_count && p.indices.size() != expected_count) {
    Malformed("top_k payload has wrong entry count");
  }
  for (std::size_t j = 0; j < p.indices.size(); ++j) {
    if (p.indices[j] >= dim) Malformed("sparse index out of range");
    if (j > 0 && p.indices[j] <= p.indices[j - 1]) {
      Malformed("sparse indices not strictly ascending");
    }
  }
}

}  // namespace

DenseVector Reconstruct(const CompressedMessage& msg) {
  if (msg.dim == 0) Malformed("dim must be >= 1");
  const std::size_t dim = msg.dim;
  std::vector<double> out(dim, 0.0);
  switch (msg.spec.kind) {
    case CompressorKind::kIdentity:
    case CompressorKind::kClip: {
      const auto& p = PayloadAs<DensePayload>(msg);
      if (p.values.size() != dim) Malformed("dense payload size mismatch");
      out = p.values;
      break;
    }
    case CompressorKind::kOneBit: {
      const auto& p = PayloadAs<SignPayload>(msg);
      if (p.negative.size() != dim) Malformed("sign bitmap size mismatch");
      for (std::size_t i = 0; i < dim; ++i) {
        out[i] = p.negative[i] ? -p.scale : p.scale;
      }
      break;
    }
    case CompressorKind::kTopK:
    case CompressorKind::kRandomSparsify: {
      const auto& p = PayloadAs<SparsePayload>(msg);
      const bool is_top_k = msg.spec.kind == CompressorKind::kTopK;
      const std::size_t expected =
          is_top_k ? std::min<std::size_t>(
                         static_cast<std::size_t>(std::max<int64_t>(msg.spec.k, 0)),
                         dim)
                   : 0;
      CheckSparse(p, dim, expected, is_top_k);
      for (std::size_t j = 0; j < p.indices.size(); ++j) {
        out[p.indices[j]] = p.values[j];
      }
      break;
    }
    case CompressorKind::kTernary: {
      const auto& p = PayloadAs<TernaryPayload>(msg);
      if (p.codes.size() != dim) Malformed("ternary code count mismatch");
      for (std::size_t i = 0; i < dim; ++i) {
        if (p.codes[i] < -1 || p.codes[i] > 1) Malformed("bad ternary code");
        out[i] = p.scale * p.codes[i];
      }
      break;
    }
    case CompressorKind::kRandomQuantize: {
      const auto& p = PayloadAs<GridPayload>(msg);
      if (p.codes.size() != dim) Malformed("grid code count mismatch");
      if (msg.spec.levels < 2) Malformed("levels must be >= 2");
      if (!(p.hi >= p.lo)) Malformed("grid range inverted");
      const uint32_t top = static_cast<uint32_t>(msg.spec.levels - 1);
      const double step = (p.hi - p.lo) / top;
      for (std::size_t i = 0; i < dim; ++i) {
        if (p.codes[i] > top) Malformed("grid code out of range");
        out[i] = p.codes[i] == top ? p.hi : p.lo + p.codes[i] * step;
      }
      break;
    }
  }
  try {
    return DenseVector(std::move(out));
  } catch (const Error& e) {
    Malformed(e.what());
  }
}

std::optional<int64_t> PlannedBitCost(const CompressorSpec& spec,
                                      std::size_t dim,
                                      int wire_bits_per_real) {
  const auto d = static_cast<int64_t>(dim);
  switch (spec.kind) {
    case CompressorKind::kIdentity:
      return d * wire_bits_per_real;
    case CompressorKind::kOneBit:
      return d + kScaleBits;
    case CompressorKind::kTopK:
      return std::min<int64_t>(spec.k, d) * SparseEntryBits(dim);
    case CompressorKind::kTernary:
      return 2 * d + kScaleBits;
    case CompressorKind::kRandomQuantize:
      return d * CeilLog2(static_cast<uint64_t>(spec.levels)) + 2 * kValueBits;
    case CompressorKind::kRandomSparsify:
      return std::nullopt;
    case CompressorKind::kClip:
      if (spec.clip_mode == ClipMode::kDecimal) return d * 64;
      return d * (64 - spec.mantissa_bits_zeroed);
  }
  return std::nullopt;
}

int64_t BitCost(const CompressedMessage& msg, int wire_bits_per_real) {
  if (msg.spec.kind == CompressorKind::kRandomSparsify) {
    const auto& p = PayloadAs<SparsePayload>(msg);
    return static_cast<int64_t>(p.indices.size()) * SparseEntryBits(msg.dim);
  }
  return *PlannedBitCost(msg.spec, msg.dim, wire_bits_per_real);
}

// ---------------------------------------------------------------------------
// Canonical serialization.

namespace {

class BitWriter {
 public:
  void Put(uint64_t value, int bits) {
    for (int b = 0; b < bits; ++b) {
      if (used_ % 8 == 0) bytes_.push_back(0);
      if ((value >> b) & 1) bytes_.back() |= static_cast<uint8_t>(1u << (used_ % 8));
      ++used_;
    }
  }
  void PutReal(double value, int bits) {
    if (bits == 64) {
      Put(std::bit_cast<uint64_t>(value), 64);
    } else {
      Put(std::bit_cast<uint32_t>(static_cast<float>(value)), 32);
    }
  }
  uint64_t bits_written() const { return used_; }
  std::vector<uint8_t> Take() { return std::move(bytes_); }

 private:
  std::vector<uint8_t> bytes_;
  uint64_t used_ = 0;
};

class BitReader {
 public:
  BitReader(const uint8_t* data, uint64_t bit_count)
      : data_(data), bit_count_(bit_count) {}

  uint64_t Get(int bits) {
    if (pos_ + static_cast<uint64_t>(bits) > bit_count_) {
      Malformed("payload truncated");
    }
    uint64_t value = 0;
    for (int b = 0; b < bits; ++b, ++pos_) {
      if ((data_[pos_ / 8] >> (pos_ % 8)) & 1) value |= uint64_t{1} << b;
    }
    return value;
  }
  double GetReal(int bits) {
    if (bits == 64) return std::bit_cast<double>(Get(64));
    return static_cast<double>(
        std::bit_cast<float>(static_cast<uint32_t>(Get(32))));
  }
  uint64_t remaining() const { return bit_count_ - pos_; }

 private:
  const uint8_t* data_;
  uint64_t bit_count_;
  uint64_t pos_ = 0;
};

template <typename T>
void PutLe(std::vector<uint8_t>& out, T value) {
  const auto raw = std::bit_cast<std::array<uint8_t, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::little) {
    out.insert(out.end(), raw.begin(), raw.end());
  } else {
    out.insert(out.end(), raw.rbegin(), raw.rend());
  }
}

template <typename T>
T GetLe(const std::vector<uint8_t>& in, std::size_t& offset) {
  std::array<uint8_t, sizeof(T)> raw;
  std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(offset), sizeof(T),
              raw.begin());
  if constexpr (std::endian::native != std::endian::little) {
    std::reverse(raw.begin(), raw.end());
  }
  offset += sizeof(T);
  return std::bit_cast<T>(raw);
}

}  // namespace

std::vector<uint8_t> Serialize(const CompressedMessage& msg,
                               int wire_bits_per_real) {
  if (wire_bits_per_real != 32 && wire_bits_per_real != 64) {
    throw Error(ErrorCode::kInvalidArgument, "wire bits must be 32 or 64");
  }
  // Validates the payload shape as a side effect.
  Reconstruct(msg);
  const int index_bits = CeilLog2(msg.dim);
  BitWriter w;
  switch (msg.spec.kind) {
    case CompressorKind::kIdentity: {
      for (double x : std::get<DensePayload>(msg.payload).values) {
        w.PutReal(x, wire_bits_per_real);
      }
      break;
    }
    case CompressorKind::kClip: {
      const auto& p = std::get<DensePayload>(msg.payload);
      const bool decimal = msg.spec.clip_mode == ClipMode::kDecimal;
      const int m = decimal ? 0 : msg.spec.mantissa_bits_zeroed;
      for (double x : p.values) w.Put(std::bit_cast<uint64_t>(x) >> m, 64 - m);
      break;
    }
    case CompressorKind::kOneBit: {
      const auto& p = std::get<SignPayload>(msg.payload);
      for (bool neg : p.negative) w.Put(neg ? 1 : 0, 1);
      w.PutReal(p.scale, kScaleBits);
      break;
    }
    case CompressorKind::kTopK:
    case CompressorKind::kRandomSparsify: {
      const auto& p = std::get<SparsePayload>(msg.payload);
      for (std::size_t j = 0; j < p.indices.size(); ++j) {
        w.Put(p.indices[j], index_bits);
        w.PutReal(p.values[j], kValueBits);
      }
      break;
    }
    case CompressorKind::kTernary: {
      const auto& p = std::get<TernaryPayload>(msg.payload);
      for (int8_t c : p.codes) w.Put(c == 0 ? 0 : (c > 0 ? 1 : 3), 2);
      w.PutReal(p.scale, kScaleBits);
      break;
    }
    case CompressorKind::kRandomQuantize: {
      const auto& p = std::get<GridPayload>(msg.payload);
      const int code_bits = CeilLog2(static_cast<uint64_t>(msg.spec.levels));
      w.PutReal(p.lo, kValueBits);
      w.PutReal(p.hi, kValueBits);
      for (uint32_t c : p.codes) w.Put(c, code_bits);
      break;
    }
  }
  const uint64_t payload_bits = w.bits_written();
  std::vector<uint8_t> out;
  out.reserve(kSerializedHeaderBytes + (payload_bits + 7) / 8);
  PutLe<uint8_t>(out, static_cast<uint8_t>(msg.spec.kind));
  PutLe<uint8_t>(out, static_cast<uint8_t>(wire_bits_per_real));
  PutLe<uint8_t>(out, static_cast<uint8_t>(msg.spec.clip_mode));
  PutLe<uint8_t>(out, static_cast<uint8_t>(msg.spec.scale_mode));
  PutLe<uint32_t>(out, static_cast<uint32_t>(msg.spec.levels));
  PutLe<uint32_t>(out, static_cast<uint32_t>(msg.spec.mantissa_bits_zeroed));
  PutLe<uint64_t>(out, msg.dim);
  PutLe<uint64_t>(out, static_cast<uint64_t>(msg.spec.k));
  PutLe<double>(out, msg.spec.keep_prob);
  PutLe<uint64_t>(out, payload_bits);
  std::vector<uint8_t> payload = w.Take();
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

CompressedMessage Deserialize(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < kSerializedHeaderBytes) Malformed("header truncated");
  std::size_t off = 0;
  const auto kind_tag = GetLe<uint8_t>(bytes, off);
  const auto wire = GetLe<uint8_t>(bytes, off);
  const auto clip_mode = GetLe<uint8_t>(bytes, off);
  const auto scale_mode = GetLe<uint8_t>(bytes, off);
  const auto levels = GetLe<uint32_t>(bytes, off);
  const auto mbits = GetLe<uint32_t>(bytes, off);
  const auto dim = GetLe<uint64_t>(bytes, off);
  const auto k = GetLe<uint64_t>(bytes, off);
  const auto keep_prob = GetLe<double>(bytes, off);
  const auto payload_bits = GetLe<uint64_t>(bytes, off);

  if (kind_tag > static_cast<uint8_t>(CompressorKind::kClip)) {
    Malformed("unknown kind tag");
  }
  if (wire != 32 && wire != 64) Malformed("bad wire width");
  if (clip_mode > 1 || scale_mode > 1) Malformed("bad mode byte");
  if (dim == 0 || dim > (uint64_t{1} << 32)) Malformed("bad dim");
  if (bytes.size() - kSerializedHeaderBytes != (payload_bits + 7) / 8) {
    Malformed("payload length does not match header");
  }

  CompressedMessage msg;
  msg.spec.kind = static_cast<CompressorKind>(kind_tag);
  msg.spec.clip_mode = static_cast<ClipMode>(clip_mode);
  msg.spec.scale_mode = static_cast<TernaryScale>(scale_mode);
  msg.spec.levels = static_cast<int>(levels);
  msg.spec.mantissa_bits_zeroed = static_cast<int>(mbits);
  msg.spec.k = static_cast<int64_t>(k);
  msg.spec.keep_prob = keep_prob;
  msg.dim = dim;
  try {
    msg.spec.Validate();
  } catch (const Error& e) {
    Malformed(e.what());
  }
  if (msg.spec.kind != CompressorKind::kRandomSparsify &&
      payload_bits != static_cast<uint64_t>(*PlannedBitCost(msg.spec, dim, wire))) {
    Malformed("payload bit count does not match the encoding formula");
  }

  BitReader r(bytes.data() + kSerializedHeaderBytes, payload_bits);
  const int index_bits = CeilLog2(dim);
  switch (msg.spec.kind) {
    case CompressorKind::kIdentity: {
      DensePayload p;
      p.values.resize(dim);
      for (double& x : p.values) x = r.GetReal(wire);
      msg.payload = std::move(p);
      break;
    }
    case CompressorKind::kClip: {
      const int m = msg.spec.clip_mode == ClipMode::kDecimal
                        ? 0
                        : msg.spec.mantissa_bits_zeroed;
      DensePayload p;
      p.values.resize(dim);
      for (double& x : p.values) x = std::bit_cast<double>(r.Get(64 - m) << m);
      msg.payload = std::move(p);
      break;
    }
    case CompressorKind::kOneBit: {
      SignPayload p;
      p.negative.resize(dim);
      for (std::size_t i = 0; i < dim; ++i) p.negative[i] = r.Get(1) != 0;
      p.scale = r.GetReal(kScaleBits);
      msg.payload = std::move(p);
      break;
    }
    case CompressorKind::kTopK:
    case CompressorKind::kRandomSparsify: {
      const auto entry_bits = static_cast<uint64_t>(SparseEntryBits(dim));
      if (payload_bits % entry_bits != 0) Malformed("ragged sparse payload");
      SparsePayload p;
      const uint64_t count = payload_bits / entry_bits;
      for (uint64_t j = 0; j < count; ++j) {
        p.indices.push_back(static_cast<uint32_t>(r.Get(index_bits)));
        p.values.push_back(r.GetReal(kValueBits));
      }
      msg.payload = std::move(p);
      break;
    }
    case CompressorKind::kTernary: {
      TernaryPayload p;
      p.codes.resize(dim);
      for (int8_t& c : p.codes) {
        const uint64_t raw = r.Get(2);
        if (raw == 2) Malformed("bad ternary code");
        c = raw == 0 ? 0 : (raw == 1 ? 1 : -1);
      }
      p.scale = r.GetReal(kScaleBits);
      msg.payload = std::move(p);
      break;
    }
    case CompressorKind::kRandomQuantize: {
      GridPayload p;
      const int code_bits = CeilLog2(levels);
      p.lo = r.GetReal(kValueBits);
      p.hi = r.GetReal(kValueBits);
      p.codes.resize(dim);
      for (uint32_t& c : p.codes) c = static_cast<uint32_t>(r.Get(code_bits));
      msg.payload = std::move(p);
      break;
    }
  }
  if (r.remaining() != 0) Malformed("trailing payload bits");
  // Shape checks (index ranges, code ranges, counts).
  Reconstruct(msg);
  return msg;
}

}  // namespace dsqueeze
