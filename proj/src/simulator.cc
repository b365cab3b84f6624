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

#include "dsqueeze/simulator.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

#include "dsqueeze/error.h"

namespace dsqueeze {
namespace {

void Require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, message);
}

void ValidateGamma(const GammaSchedule& g) {
  switch (g.mode) {
    case GammaMode::kConstant:
    case GammaMode::kStep:
      Require(std::isfinite(g.value) && g.value >= 0.0,
              "gamma.value must be finite and >= 0");
      if (g.mode == GammaMode::kStep) {
        Require(g.iterations_per_epoch >= 1,
                "gamma.iterations_per_epoch must be >= 1");
        Require(g.decay_every >= 1, "gamma.decay_every must be >= 1");
        Require(std::isfinite(g.decay_factor) && g.decay_factor > 0.0,
                "gamma.decay_factor must be > 0");
      }
      break;
    case GammaMode::kCorollary:
      Require(g.L.has_value() && g.sigma.has_value() && g.epsilon.has_value(),
              "corollary gamma needs L, sigma and epsilon");
      break;
  }
}

double MaxWorkerDeltaNorm(const ClusterState& state) {
  double worst = 0.0;
  for (const ResidualState& r : state.worker_residuals) {
    worst = std::max(worst, L2Norm(r.delta()));
  }
  return worst;
}

}  // namespace

std::string_view GammaModeName(GammaMode mode) {
  switch (mode) {
    case GammaMode::kConstant:
      return "constant";
    case GammaMode::kCorollary:
      return "corollary";
    case GammaMode::kStep:
      return "step";
  }
  return "unknown";
}

std::optional<GammaMode> ParseGammaMode(std::string_view name) {
  for (GammaMode m :
       {GammaMode::kConstant, GammaMode::kCorollary, GammaMode::kStep}) {
    if (GammaModeName(m) == name) return m;
  }
  return std::nullopt;
}

void CostModel::Validate() const {
  Require(server_bandwidth > 0.0 && !std::isnan(server_bandwidth),
          "cost.server_bandwidth must be > 0");
  Require(std::isfinite(per_worker_compute) && per_worker_compute >= 0.0,
          "cost.per_worker_compute must be >= 0");
  Require(wire_bits_per_real == 32 || wire_bits_per_real == 64,
          "cost.wire_bits_per_real must be 32 or 64");
}

void TrainConfig::Validate() const {
  Require(num_workers >= 1, "workers must be >= 1");
  Require(iterations >= 1, "iterations must be >= 1");
  Require(iterations <= (1LL << 32) - 1, "iterations must fit in 32 bits");
  ValidateAlgorithmCompressors(algorithm, worker_compressor, server_compressor);
  ValidateGamma(gamma);
  problem.Validate();
  cost.Validate();
  ResolveGamma(*this, 0);
}

double ResolveGamma(const TrainConfig& cfg, long long t) {
  const GammaSchedule& g = cfg.gamma;
  ValidateGamma(g);
  switch (g.mode) {
    case GammaMode::kConstant:
      return g.value;
    case GammaMode::kCorollary:
      return LrCorollary(*g.L, *g.sigma, *g.epsilon, cfg.iterations,
                         static_cast<long long>(cfg.num_workers));
    case GammaMode::kStep: {
      const long long epoch = t / g.iterations_per_epoch;
      const long long drops = epoch / g.decay_every;
      return g.value / std::pow(g.decay_factor, static_cast<double>(drops));
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown gamma mode");
}

double IterationTime(const StepReport& report, const CostModel& cost) {
  cost.Validate();
  const double bits = static_cast<double>(report.bits_up + report.bits_down);
  return cost.per_worker_compute + bits / cost.server_bandwidth;
}

RunResult RunExperiment(const TrainConfig& cfg) {
  cfg.Validate();
  const std::unique_ptr<Problem> problem =
      MakeProblem(cfg.problem, cfg.num_workers, cfg.seed);
  return RunExperiment(cfg, *problem);
}

RunResult RunExperiment(const TrainConfig& cfg, const Problem& problem) {
  Require(cfg.num_workers >= 1 && cfg.iterations >= 1,
          "workers and iterations must be >= 1");
  ValidateAlgorithmCompressors(cfg.algorithm, cfg.worker_compressor,
                               cfg.server_compressor);
  cfg.cost.Validate();
  if (problem.num_workers() != cfg.num_workers) {
    throw Error(ErrorCode::kDimensionMismatch,
                "problem is split over " +
                    std::to_string(problem.num_workers()) + " workers, not " +
                    std::to_string(cfg.num_workers));
  }

  StepConfig step_cfg;
  step_cfg.worker_compressor = cfg.worker_compressor;
  step_cfg.server_compressor = cfg.server_compressor;
  step_cfg.seed = cfg.seed;
  step_cfg.wire_bits_per_real = cfg.cost.wire_bits_per_real;
  step_cfg.parallel_workers = cfg.parallel_workers;

  ClusterState state =
      ClusterState::Initial(problem.InitialPoint(), cfg.num_workers);
  std::optional<Trajectory> trajectory;
  if (cfg.record_analysis) {
    trajectory.emplace();
    trajectory->num_workers = cfg.num_workers;
    trajectory->steps.reserve(static_cast<std::size_t>(cfg.iterations));
  }

  std::vector<MetricsRow> metrics;
  metrics.reserve(static_cast<std::size_t>(cfg.iterations));
  double clock = 0.0;
  for (long long t = 0; t < cfg.iterations; ++t) {
    step_cfg.gamma = ResolveGamma(cfg, t);
    MetricsRow row;
    row.iter = t;
    row.loss = problem.Loss(state.x);
    row.grad_norm_sq = SquaredNorm(problem.FullGrad(state.x));

    StepResult result = RunStep(cfg.algorithm, state, problem, step_cfg);
    clock += IterationTime(result.report, cfg.cost);
    row.bits_up = result.report.bits_up;
    row.bits_down = result.report.bits_down;
    row.sim_time_s = clock;
    row.server_delta_norm = L2Norm(result.state.server_residual.delta());
    row.max_worker_delta_norm = MaxWorkerDeltaNorm(result.state);
    metrics.push_back(row);

    if (trajectory) {
      TrajectoryStep step{state.x,
                          Mean(result.report.per_worker_grads),
                          result.report.applied_update,
                          ComputeOmega(result.state.worker_residuals,
                                       result.state.server_residual),
                          step_cfg.gamma,
                          row.grad_norm_sq,
                          SquaredNorm(result.state.server_residual.delta()),
                          {},
                          {}};
      for (std::size_t i = 0; i < cfg.num_workers; ++i) {
        step.worker_delta_sq.push_back(
            SquaredNorm(result.state.worker_residuals[i].delta()));
        step.worker_grad_norm.push_back(
            L2Norm(result.report.per_worker_grads[i]));
      }
      trajectory->steps.push_back(std::move(step));
    }
    state = std::move(result.state);
  }
  if (trajectory) trajectory->final_x = state.x;
  return RunResult{std::move(metrics), std::move(state), std::move(trajectory)};
}

Summary Summarize(std::span<const MetricsRow> metrics) {
  if (metrics.empty()) {
    throw Error(ErrorCode::kIncompleteTrajectory, "no metrics to summarize");
  }
  Summary s;
  s.iterations = static_cast<long long>(metrics.size());
  s.final_loss = metrics.back().loss;
  s.final_grad_norm_sq = metrics.back().grad_norm_sq;
  std::vector<double> grads;
  grads.reserve(metrics.size());
  for (const MetricsRow& row : metrics) {
    grads.push_back(row.grad_norm_sq);
    s.total_bits_up += row.bits_up;
    s.total_bits_down += row.bits_down;
    s.max_server_delta_norm =
        std::max(s.max_server_delta_norm, row.server_delta_norm);
    s.max_worker_delta_norm =
        std::max(s.max_worker_delta_norm, row.max_worker_delta_norm);
  }
  s.theorem_metric = TheoremMetric(grads);
  s.total_bits = s.total_bits_up + s.total_bits_down;
  s.total_sim_time_s = metrics.back().sim_time_s;
  return s;
}

std::string FormatReal(double value) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string MetricsCsv(std::span<const MetricsRow> metrics) {
  std::string out = kMetricsHeader;
  out += '\n';
  for (const MetricsRow& r : metrics) {
    out += std::to_string(r.iter);
    out += ',' + FormatReal(r.loss);
    out += ',' + FormatReal(r.grad_norm_sq);
    out += ',' + std::to_string(r.bits_up);
    out += ',' + std::to_string(r.bits_down);
    out += ',' + FormatReal(r.sim_time_s);
    out += ',' + FormatReal(r.server_delta_norm);
    out += ',' + FormatReal(r.max_worker_delta_norm);
    out += '\n';
  }
  return out;
}

void WriteMetricsCsv(const std::filesystem::path& path,
                     std::span<const MetricsRow> metrics) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  file << MetricsCsv(metrics);
  if (!file.flush()) {
    throw Error(ErrorCode::kIo, "write failed: " + path.string());
  }
}

}  // namespace dsqueeze
