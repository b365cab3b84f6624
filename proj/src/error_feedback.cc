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

#include "dsqueeze/error_feedback.h"

namespace dsqueeze {

CompensationResult CompensateCompressUpdate(const DenseVector& input,
                                            const ResidualState& state,
                                            const CompressorSpec& spec,
                                            const RngStream& rng) {
  CheckSameDim(input, state.delta(), "CompensateCompressUpdate");
  // 1. v <- input + delta
  DenseVector compensated = Add(input, state.delta());
  // 2. c <- Q(v)
  CompressedMessage message = Compress(spec, compensated, rng);
  DenseVector reconstruction = Reconstruct(message);
  // 3. delta <- v - c
  ResidualState next(state.owner(), Subtract(compensated, reconstruction));
  return CompensationResult{std::move(message), std::move(reconstruction),
                            std::move(next)};
}

ResidualState Reset(const ResidualState& state) {
  return ResidualState(state.owner(), state.dim());
}

}  // namespace dsqueeze
