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

#ifndef DSQUEEZE_RNG_H_
#define DSQUEEZE_RNG_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dsqueeze {

// Philox4x32-10 block function (Salmon et al., SC 2011).
std::array<uint32_t, 4> Philox4x32(std::array<uint32_t, 4> counter,
                                   std::array<uint32_t, 2> key);

enum class Purpose : uint32_t {
  kData = 1,
  kWorkerCompress = 2,
  kServerCompress = 3,
  kDataset = 4,
  kInit = 5,
  kTest = 100,
};

// Node index used for the parameter server in stream ids.
inline constexpr uint32_t kServerNode = 0xFFFFFFFFu;

struct StreamId {
  uint32_t node = 0;
  uint32_t iteration = 0;
  Purpose purpose = Purpose::kData;
};

// Counter-based stream: the value at position `index` is a pure function of
// (seed, node, iteration, purpose, index). The key is the seed and the
// counter is {block, iteration, node, purpose}, so distinct stream ids never
// share a counter block. Each block yields two 64-bit outputs, which caps a
// stream at 2^33 draws.
class RngStream {
 public:
  RngStream(uint64_t seed, StreamId id) : seed_(seed), id_(id) {}

  uint64_t Bits64(uint64_t index) const;
  // Uniform on [0, 1) with 53 random bits.
  double Uniform(uint64_t index) const;

  uint64_t seed() const { return seed_; }
  const StreamId& id() const { return id_; }

 private:
  uint64_t seed_;
  StreamId id_;
};

std::vector<double> DrawUniform(const RngStream& stream, std::size_t count);
// Standard normals via Box-Muller; consumes two uniforms per value.
std::vector<double> DrawNormal(const RngStream& stream, std::size_t count);

// Sequential reader over a stream. Holds only its own position.
class RngCursor {
 public:
  explicit RngCursor(const RngStream& stream) : stream_(stream) {}

  double NextUniform() { return stream_.Uniform(next_++); }
  double NextNormal();
  // Uniform integer in [0, bound).
  uint64_t NextIndex(uint64_t bound);

 private:
  RngStream stream_;
  uint64_t next_ = 0;
};

}  // namespace dsqueeze

#endif  // DSQUEEZE_RNG_H_
