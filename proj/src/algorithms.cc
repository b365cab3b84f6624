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

#include "dsqueeze/algorithms.h"

#include <algorithm>
#include <exception>
#include <functional>
#include <string>
#include <thread>

#include "dsqueeze/error.h"

namespace dsqueeze {
namespace {

struct SiteRule {
  CompressorSpec spec;
  bool compensate = false;
};

struct WorkerOutcome {
  std::optional<DenseVector> grad;
  std::optional<DenseVector> reconstruction;
  std::optional<ResidualState> residual;
  int64_t bits = 0;
};

void ForEachWorker(std::size_t n, bool parallel,
                   const std::function<void(std::size_t)>& fn) {
  if (!parallel || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t threads = std::min<std::size_t>(
      n, std::max(2u, std::thread::hardware_concurrency()));
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t tid = 0; tid < threads; ++tid) {
    pool.emplace_back([&, tid] {
      try {
        for (std::size_t i = tid; i < n; i += threads) fn(i);
      } catch (...) {
        errors[tid] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void CheckConsistent(const ClusterState& state, const Problem& problem) {
  if (state.x.dim() != problem.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model dim " + std::to_string(state.x.dim()) +
                    " != problem dim " + std::to_string(problem.dim()));
  }
  if (state.num_workers() != problem.num_workers()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cluster has " + std::to_string(state.num_workers()) +
                    " workers, problem has " +
                    std::to_string(problem.num_workers()) + " shards");
  }
  if (state.server_residual.dim() != state.x.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "server residual dim");
  }
  for (const auto& r : state.worker_residuals) {
    if (r.dim() != state.x.dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "worker residual dim");
    }
  }
}

StepResult ExecuteStep(const ClusterState& state, const Problem& problem,
                       const StepConfig& cfg, const SiteRule& worker,
                       const SiteRule& server) {
  CheckConsistent(state, problem);
  worker.spec.Validate();
  server.spec.Validate();
  const std::size_t n = state.num_workers();
  const uint32_t t = state.t;

  // (a) Workers: sample, compute, (compensate,) compress.
  std::vector<WorkerOutcome> outcomes(n);
  ForEachWorker(n, cfg.parallel_workers, [&](std::size_t i) {
    const auto node = static_cast<uint32_t>(i);
    WorkerOutcome& out = outcomes[i];
    out.grad = problem.StochasticGrad(state.x, SampleDraw{cfg.seed, node, t});
    const RngStream rng(cfg.seed, {node, t, Purpose::kWorkerCompress});
    if (worker.compensate) {
      CompensationResult r = CompensateCompressUpdate(
          *out.grad, state.worker_residuals[i], worker.spec, rng);
      out.bits = BitCost(r.message, cfg.wire_bits_per_real);
      out.reconstruction = std::move(r.reconstruction);
      out.residual = std::move(r.state);
    } else {
      CompressedMessage msg = Compress(worker.spec, *out.grad, rng);
      out.bits = BitCost(msg, cfg.wire_bits_per_real);
      out.reconstruction = Reconstruct(msg);
      out.residual = state.worker_residuals[i];
    }
  });

  StepReport report{DenseVector::Zeros(state.x.dim()), {}, 0, 0};
  std::vector<DenseVector> reconstructions;
  reconstructions.reserve(n);
  std::vector<ResidualState> worker_residuals;
  worker_residuals.reserve(n);
  report.per_worker_grads.reserve(n);
  for (auto& out : outcomes) {
    report.bits_up += out.bits;
    report.per_worker_grads.push_back(std::move(*out.grad));
    reconstructions.push_back(std::move(*out.reconstruction));
    worker_residuals.push_back(std::move(*out.residual));
  }

  // (b) Server: average, (compensate,) compress, broadcast.
  const DenseVector aggregate = Mean(reconstructions);
  const RngStream server_rng(cfg.seed, {kServerNode, t, Purpose::kServerCompress});
  ResidualState server_residual = state.server_residual;
  std::optional<DenseVector> broadcast;
  int64_t down_cost = 0;
  if (server.compensate) {
    CompensationResult r =
        CompensateCompressUpdate(aggregate, state.server_residual, server.spec,
                                 server_rng);
    down_cost = BitCost(r.message, cfg.wire_bits_per_real);
    broadcast = std::move(r.reconstruction);
    server_residual = std::move(r.state);
  } else {
    CompressedMessage msg = Compress(server.spec, aggregate, server_rng);
    down_cost = BitCost(msg, cfg.wire_bits_per_real);
    broadcast = Reconstruct(msg);
  }
  report.bits_down = static_cast<int64_t>(n) * down_cost;

  // (c) Every worker applies x <- x - gamma * Q[v].
  report.applied_update = Scale(-cfg.gamma, *broadcast);
  ClusterState next{Add(state.x, report.applied_update),
                    std::move(worker_residuals), std::move(server_residual),
                    t + 1};
  return StepResult{std::move(next), std::move(report)};
}

}  // namespace

std::string_view AlgorithmName(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kDoubleSqueeze:
      return "doublesqueeze";
    case Algorithm::kMemSgd:
      return "memsgd";
    case Algorithm::kQsgd:
      return "qsgd";
    case Algorithm::kTopKSgd:
      return "topk_sgd";
    case Algorithm::kVanilla:
      return "vanilla";
  }
  return "unknown";
}

std::optional<Algorithm> ParseAlgorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kDoubleSqueeze, Algorithm::kMemSgd,
                      Algorithm::kQsgd, Algorithm::kTopKSgd,
                      Algorithm::kVanilla}) {
    if (AlgorithmName(a) == name) return a;
  }
  return std::nullopt;
}

ClusterState ClusterState::Initial(DenseVector x0, std::size_t num_workers) {
  if (num_workers < 1) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one worker");
  }
  const std::size_t d = x0.dim();
  std::vector<ResidualState> workers;
  workers.reserve(num_workers);
  for (std::size_t i = 0; i < num_workers; ++i) {
    workers.emplace_back(NodeId::Worker(static_cast<uint32_t>(i)), d);
  }
  return ClusterState{std::move(x0), std::move(workers),
                      ResidualState(NodeId::Server(), d), 0};
}

void ValidateAlgorithmCompressors(Algorithm algorithm,
                                  const CompressorSpec& worker,
                                  const CompressorSpec& server) {
  worker.Validate();
  server.Validate();
  if (algorithm == Algorithm::kQsgd && worker.kind != CompressorKind::kTernary) {
    throw Error(ErrorCode::kInvalidArgument,
                "qsgd requires a ternary worker compressor, got " +
                    worker.ToString());
  }
  if (algorithm == Algorithm::kTopKSgd && worker.kind != CompressorKind::kTopK) {
    throw Error(ErrorCode::kInvalidArgument,
                "topk_sgd requires a top_k worker compressor, got " +
                    worker.ToString());
  }
}

CompressorSpec EffectiveWorkerCompressor(Algorithm algorithm,
                                         const StepConfig& cfg) {
  switch (algorithm) {
    case Algorithm::kQsgd:
      return CompressorSpec::Ternary(cfg.worker_compressor.scale_mode);
    case Algorithm::kTopKSgd:
      return CompressorSpec::TopK(cfg.worker_compressor.k);
    case Algorithm::kVanilla:
      return CompressorSpec::Identity();
    default:
      return cfg.worker_compressor;
  }
}

CompressorSpec EffectiveServerCompressor(Algorithm algorithm,
                                         const StepConfig& cfg) {
  if (algorithm == Algorithm::kDoubleSqueeze) return cfg.server_compressor;
  return CompressorSpec::Identity();
}

StepResult DoubleSqueezeStep(const ClusterState& state, const Problem& problem,
                             const StepConfig& cfg) {
  return ExecuteStep(state, problem, cfg, {cfg.worker_compressor, true},
                     {cfg.server_compressor, true});
}

StepResult MemSgdStep(const ClusterState& state, const Problem& problem,
                      const StepConfig& cfg) {
  return ExecuteStep(state, problem, cfg, {cfg.worker_compressor, true},
                     {CompressorSpec::Identity(), false});
}

StepResult QsgdStep(const ClusterState& state, const Problem& problem,
                    const StepConfig& cfg) {
  return ExecuteStep(
      state, problem, cfg,
      {CompressorSpec::Ternary(cfg.worker_compressor.scale_mode), false},
      {CompressorSpec::Identity(), false});
}

StepResult TopKSgdStep(const ClusterState& state, const Problem& problem,
                       const StepConfig& cfg) {
  return ExecuteStep(state, problem, cfg,
                     {CompressorSpec::TopK(cfg.worker_compressor.k), false},
                     {CompressorSpec::Identity(), false});
}

StepResult VanillaStep(const ClusterState& state, const Problem& problem,
                       const StepConfig& cfg) {
  return ExecuteStep(state, problem, cfg, {CompressorSpec::Identity(), false},
                     {CompressorSpec::Identity(), false});
}

StepResult RunStep(Algorithm algorithm, const ClusterState& state,
                   const Problem& problem, const StepConfig& cfg) {
  switch (algorithm) {
    case Algorithm::kDoubleSqueeze:
      return DoubleSqueezeStep(state, problem, cfg);
    case Algorithm::kMemSgd:
      return MemSgdStep(state, problem, cfg);
    case Algorithm::kQsgd:
      return QsgdStep(state, problem, cfg);
    case Algorithm::kTopKSgd:
      return TopKSgdStep(state, problem, cfg);
    case Algorithm::kVanilla:
      return VanillaStep(state, problem, cfg);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown algorithm");
}

}  // namespace dsqueeze
