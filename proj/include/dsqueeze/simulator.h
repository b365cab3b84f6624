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

#ifndef DSQUEEZE_SIMULATOR_H_
#define DSQUEEZE_SIMULATOR_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsqueeze/algorithms.h"
#include "dsqueeze/analysis.h"
#include "dsqueeze/compressor.h"
#include "dsqueeze/problem.h"

namespace dsqueeze {

enum class GammaMode { kConstant, kCorollary, kStep };

std::string_view GammaModeName(GammaMode mode);
std::optional<GammaMode> ParseGammaMode(std::string_view name);

struct GammaSchedule {
  GammaMode mode = GammaMode::kConstant;
  // Constant value, or the initial value of the step schedule.
  double value = 0.1;
  // Corollary mode inputs; all three are required there.
  std::optional<double> L;
  std::optional<double> sigma;
  std::optional<double> epsilon;
  // Step mode: divide by decay_factor every decay_every epochs.
  long long iterations_per_epoch = 1;
  long long decay_every = 160;
  double decay_factor = 10.0;

  bool operator==(const GammaSchedule&) const = default;
};

struct CostModel {
  double server_bandwidth = 1e9;   // bits per second through the server link
  double per_worker_compute = 0.0; // seconds per iteration
  int wire_bits_per_real = 32;     // 32 or 64

  void Validate() const;
  bool operator==(const CostModel&) const = default;
};

struct TrainConfig {
  Algorithm algorithm = Algorithm::kDoubleSqueeze;
  CompressorSpec worker_compressor;
  CompressorSpec server_compressor;
  std::size_t num_workers = 1;
  long long iterations = 1;
  GammaSchedule gamma;
  uint64_t seed = 0;
  ProblemSpec problem;
  CostModel cost;
  bool record_analysis = false;
  bool parallel_workers = false;

  // Throws Error(kInvalidArgument) on the first problem found.
  void Validate() const;
};

struct MetricsRow {
  long long iter = 0;
  double loss = 0.0;          // f(x_t)
  double grad_norm_sq = 0.0;  // ||grad f(x_t)||^2
  int64_t bits_up = 0;
  int64_t bits_down = 0;
  double sim_time_s = 0.0;    // cumulative, through the end of step t
  double server_delta_norm = 0.0;
  double max_worker_delta_norm = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

struct RunResult {
  std::vector<MetricsRow> metrics;
  ClusterState final_state;
  std::optional<Trajectory> trajectory;
};

// Builds the problem from cfg.problem and runs cfg.iterations steps.
RunResult RunExperiment(const TrainConfig& cfg);
// Same, over a caller-supplied problem (cfg.problem is ignored).
RunResult RunExperiment(const TrainConfig& cfg, const Problem& problem);

// per_worker_compute + (bits_up + bits_down) / server_bandwidth.
double IterationTime(const StepReport& report, const CostModel& cost);

// Step size used at iteration t.
double ResolveGamma(const TrainConfig& cfg, long long t = 0);

struct Summary {
  long long iterations = 0;
  double final_loss = 0.0;
  double final_grad_norm_sq = 0.0;
  double theorem_metric = 0.0;
  int64_t total_bits_up = 0;
  int64_t total_bits_down = 0;
  int64_t total_bits = 0;
  double total_sim_time_s = 0.0;
  double max_server_delta_norm = 0.0;
  double max_worker_delta_norm = 0.0;
};

Summary Summarize(std::span<const MetricsRow> metrics);

// %.17g formatting: 17 significant digits, round-trips every double.
std::string FormatReal(double value);

inline constexpr const char* kMetricsHeader =
    "iter,loss,grad_norm_sq,bits_up,bits_down,sim_time_s,server_delta_norm,"
    "max_worker_delta_norm";

std::string MetricsCsv(std::span<const MetricsRow> metrics);
void WriteMetricsCsv(const std::filesystem::path& path,
                     std::span<const MetricsRow> metrics);

}  // namespace dsqueeze

#endif  // DSQUEEZE_SIMULATOR_H_
