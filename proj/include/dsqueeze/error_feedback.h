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

#ifndef DSQUEEZE_ERROR_FEEDBACK_H_
#define DSQUEEZE_ERROR_FEEDBACK_H_

#include <cstdint>

#include "dsqueeze/compressor.h"
#include "dsqueeze/dense_vector.h"
#include "dsqueeze/rng.h"

namespace dsqueeze {

// Identifies the node holding a residual: a worker index or the server.
struct NodeId {
  static NodeId Worker(uint32_t index) { return NodeId{index}; }
  static NodeId Server() { return NodeId{kServerNode}; }

  bool is_server() const { return index == kServerNode; }
  bool operator==(const NodeId&) const = default;

  uint32_t index = 0;
};

// Accumulated compression error held by one node, kept at full precision.
class ResidualState {
 public:
  ResidualState(NodeId owner, std::size_t dim)
      : owner_(owner), delta_(DenseVector::Zeros(dim)) {}
  ResidualState(NodeId owner, DenseVector delta)
      : owner_(owner), delta_(std::move(delta)) {}

  NodeId owner() const { return owner_; }
  const DenseVector& delta() const { return delta_; }
  std::size_t dim() const { return delta_.dim(); }

  bool operator==(const ResidualState&) const = default;

 private:
  NodeId owner_;
  DenseVector delta_;
};

struct CompensationResult {
  CompressedMessage message;
  DenseVector reconstruction;  // Reconstruct(message)
  ResidualState state;         // delta = input + old delta - reconstruction
};

// v = input + delta; send Compress(v); delta <- v - Reconstruct(msg).
// Serves both the worker and the server compensation sites.
CompensationResult CompensateCompressUpdate(const DenseVector& input,
                                            const ResidualState& state,
                                            const CompressorSpec& spec,
                                            const RngStream& rng);

ResidualState Reset(const ResidualState& state);

}  // namespace dsqueeze

#endif  // DSQUEEZE_ERROR_FEEDBACK_H_
