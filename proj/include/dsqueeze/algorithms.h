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

#ifndef DSQUEEZE_ALGORITHMS_H_
#define DSQUEEZE_ALGORITHMS_H_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "dsqueeze/compressor.h"
#include "dsqueeze/dense_vector.h"
#include "dsqueeze/error_feedback.h"
#include "dsqueeze/problem.h"

namespace dsqueeze {

enum class Algorithm { kDoubleSqueeze, kMemSgd, kQsgd, kTopKSgd, kVanilla };

std::string_view AlgorithmName(Algorithm algorithm);
std::optional<Algorithm> ParseAlgorithm(std::string_view name);

// Synchronous parameter-server state. There is a single model copy `x`;
// every worker reads it, so all workers agree by construction.
struct ClusterState {
  DenseVector x;
  std::vector<ResidualState> worker_residuals;
  ResidualState server_residual;
  uint32_t t = 0;

  static ClusterState Initial(DenseVector x0, std::size_t num_workers);
  std::size_t num_workers() const { return worker_residuals.size(); }
};

struct StepConfig {
  CompressorSpec worker_compressor;
  CompressorSpec server_compressor;
  double gamma = 0.1;
  uint64_t seed = 0;
  // Bits per real charged for uncompressed (identity) messages.
  int wire_bits_per_real = 32;
  // Evaluate workers on separate threads. Results are identical to the
  // sequential path: streams are per worker and the reduction order fixed.
  bool parallel_workers = false;
};

struct StepReport {
  DenseVector applied_update;  // x_{t+1} - x_t = -gamma * server reconstruction
  std::vector<DenseVector> per_worker_grads;
  int64_t bits_up = 0;    // sum of uplink message costs
  int64_t bits_down = 0;  // n * downlink message cost
};

struct StepResult {
  ClusterState state;
  StepReport report;
};

// Workers compensate and compress; the server averages the reconstructions,
// compensates and compresses again; every worker applies the result.
StepResult DoubleSqueezeStep(const ClusterState& state, const Problem& problem,
                             const StepConfig& cfg);
// Worker-side compensation only; the server broadcasts the dense average.
StepResult MemSgdStep(const ClusterState& state, const Problem& problem,
                      const StepConfig& cfg);
// Ternary worker quantization (worker_compressor.scale_mode), no residuals.
StepResult QsgdStep(const ClusterState& state, const Problem& problem,
                    const StepConfig& cfg);
// Top-k worker sparsification (worker_compressor.k), no residuals.
StepResult TopKSgdStep(const ClusterState& state, const Problem& problem,
                       const StepConfig& cfg);
// Plain parallel SGD.
StepResult VanillaStep(const ClusterState& state, const Problem& problem,
                       const StepConfig& cfg);

StepResult RunStep(Algorithm algorithm, const ClusterState& state,
                   const Problem& problem, const StepConfig& cfg);

// The compressor each site actually uses for `algorithm`, after forcing
// identity where the scheme sends dense vectors.
CompressorSpec EffectiveWorkerCompressor(Algorithm algorithm,
                                         const StepConfig& cfg);
CompressorSpec EffectiveServerCompressor(Algorithm algorithm,
                                         const StepConfig& cfg);

// Checks the worker compressor kind the scheme requires (qsgd: ternary,
// topk_sgd: top_k). Throws Error(kInvalidArgument).
void ValidateAlgorithmCompressors(Algorithm algorithm,
                                  const CompressorSpec& worker,
                                  const CompressorSpec& server);

}  // namespace dsqueeze

#endif  // DSQUEEZE_ALGORITHMS_H_
