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

// Command-line front end: `dsqueeze run` and `dsqueeze validate`.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dsqueeze/error.h"
#include "dsqueeze/harness.h"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> algorithm;
  std::optional<std::size_t> workers;
  std::optional<long long> iterations;
  std::optional<double> lr;
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
  bool checks = false;
  bool no_checks = false;
  std::vector<double> bandwidth_sweep;
  bool parallel = false;
};

void AddOverrideFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config, "YAML batch config")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--algorithm", f.algorithm,
                  "doublesqueeze|memsgd|qsgd|topk_sgd|vanilla");
  cmd->add_option("--workers", f.workers, "number of workers")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--iterations", f.iterations, "iterations per run")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lr", f.lr, "constant step size")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", f.seed, "experiment seed");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  auto* on = cmd->add_flag("--checks", f.checks, "run invariant checkers");
  cmd->add_flag("--no-checks", f.no_checks, "skip invariant checkers")
      ->excludes(on);
  cmd->add_option("--bandwidth-sweep", f.bandwidth_sweep,
                  "server bandwidths (bits/s) for the time table")
      ->delimiter(',');
  cmd->add_flag("--parallel", f.parallel, "evaluate workers on threads");
}

dsqueeze::ExperimentBatch Load(const Flags& f) {
  dsqueeze::ExperimentBatch batch = dsqueeze::LoadConfig(f.config);
  dsqueeze::Overrides o;
  if (f.algorithm) {
    o.algorithm = dsqueeze::ParseAlgorithm(*f.algorithm);
    if (!o.algorithm) {
      throw dsqueeze::ConfigError("--algorithm", 0,
                                  "unknown algorithm '" + *f.algorithm + "'");
    }
  }
  o.workers = f.workers;
  o.iterations = f.iterations;
  o.lr = f.lr;
  o.seed = f.seed;
  if (f.out_dir) o.out_dir = *f.out_dir;
  if (f.checks) o.checks = true;
  if (f.no_checks) o.checks = false;
  if (!f.bandwidth_sweep.empty()) o.bandwidth_sweep = f.bandwidth_sweep;
  if (f.parallel) o.parallel = true;
  dsqueeze::ApplyOverrides(batch, o);
  return batch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic parameter-server simulator for compressed SGD"};
  app.require_subcommand(1);

  Flags run_flags;
  CLI::App* run = app.add_subcommand("run", "execute a batch and write reports");
  AddOverrideFlags(run, run_flags);

  Flags validate_flags;
  CLI::App* validate =
      app.add_subcommand("validate", "parse and check a config, then exit");
  AddOverrideFlags(validate, validate_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? dsqueeze::kExitOk : dsqueeze::kExitConfigError;
  }

  try {
    if (*validate) {
      const dsqueeze::ExperimentBatch batch = Load(validate_flags);
      std::cout << "ok: " << batch.runs.size() << " run(s) in batch '"
                << batch.name << "'\n";
      return dsqueeze::kExitOk;
    }
    const dsqueeze::ExperimentBatch batch = Load(run_flags);
    return dsqueeze::RunBatch(batch, std::cerr);
  } catch (const dsqueeze::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dsqueeze::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dsqueeze::kExitRuntimeError;
  }
}
