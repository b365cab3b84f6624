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

#ifndef DSQUEEZE_HARNESS_H_
#define DSQUEEZE_HARNESS_H_

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dsqueeze/simulator.h"

namespace dsqueeze {

struct NamedRun {
  std::string name;
  TrainConfig config;
};

struct ExperimentBatch {
  std::string name = "batch";
  std::filesystem::path out_dir = "out";
  // Every run shares the seed and problem, so data draws are identical.
  bool paired = false;
  bool checks = true;
  bool parallel = false;
  // Server bandwidths (bits/s) for the time-per-iteration table.
  std::vector<double> bandwidth_sweep;
  std::vector<NamedRun> runs;
};

// Parses the YAML batch schema documented in docs/config.md. Throws
// ConfigError naming the field path and source line of the first problem.
ExperimentBatch ParseConfig(std::string_view text);
ExperimentBatch LoadConfig(const std::filesystem::path& path);

// Command-line values that replace config-file values in every run.
struct Overrides {
  std::optional<Algorithm> algorithm;
  std::optional<std::size_t> workers;
  std::optional<long long> iterations;
  std::optional<double> lr;  // constant step size
  std::optional<uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<bool> checks;
  std::optional<std::vector<double>> bandwidth_sweep;
  std::optional<bool> parallel;
};

// Applies the overrides and re-validates; throws ConfigError.
void ApplyOverrides(ExperimentBatch& batch, const Overrides& overrides);

struct CheckVerdict {
  std::string name;
  bool applicable = true;
  bool pass = true;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

inline constexpr double kClosedFormTolerance = 1e-10;
inline constexpr double kTelescopingTolerance = 1e-8;

// Closed-form update, telescoping and residual-bound verdicts for a run
// recorded with record_analysis.
std::vector<CheckVerdict> RunCheckers(const TrainConfig& cfg,
                                      const Trajectory& trajectory);

struct RunOutcome {
  std::string name;
  TrainConfig config;
  std::vector<MetricsRow> metrics;
  Summary summary;
  std::vector<CheckVerdict> checks;
};

struct BatchResult {
  std::vector<RunOutcome> runs;
  bool checks_failed = false;
};

// Runs every member in order. No files are written.
BatchResult ExecuteBatch(const ExperimentBatch& batch);

// Mean seconds per iteration of `summary` at `bandwidth` bits/s.
double MeanIterationTime(const Summary& summary, const CostModel& cost,
                         double bandwidth);

std::string SummaryCsv(const BatchResult& result);
std::string SummaryText(const BatchResult& result);
std::string BandwidthSweepCsv(const BatchResult& result,
                              const std::vector<double>& bandwidths);
std::string ReportText(const ExperimentBatch& batch, const BatchResult& result);

// Writes <name>.csv per run, summary.csv, summary.txt, report.txt and, with
// a sweep, bandwidth_sweep.csv. Throws before writing anything when
// `result` is empty.
void EmitReport(const ExperimentBatch& batch, const BatchResult& result);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;
inline constexpr int kExitCheckFailure = 4;

// Executes and emits the batch; returns an exit status. Progress and
// errors go to `log`.
int RunBatch(const ExperimentBatch& batch, std::ostream& log);

}  // namespace dsqueeze

#endif  // DSQUEEZE_HARNESS_H_
