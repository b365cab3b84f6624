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

#include "dsqueeze/harness.h"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <system_error>

#include "dsqueeze/error.h"

namespace dsqueeze {
namespace {

int LineOf(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : 0;
}

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void CheckKeys(const YAML::Node& node, const std::string& path,
               std::initializer_list<std::string_view> allowed) {
  if (!node.IsMap()) {
    throw ConfigError(path, LineOf(node), "expected a mapping");
  }
  for (const auto& entry : node) {
    const std::string key = entry.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(Join(path, key), LineOf(entry.first), "unknown key");
    }
  }
}

template <typename T>
T Get(const YAML::Node& node, const std::string& path, const char* what) {
  if (!node.IsScalar()) {
    throw ConfigError(path, LineOf(node), std::string("expected ") + what);
  }
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, LineOf(node),
                      std::string("expected ") + what + ", got '" +
                          node.Scalar() + "'");
  }
}

double GetReal(const YAML::Node& node, const std::string& path) {
  const auto v = Get<double>(node, path, "a number");
  if (!std::isfinite(v)) {
    throw ConfigError(path, LineOf(node), "must be finite");
  }
  return v;
}

long long GetInt(const YAML::Node& node, const std::string& path) {
  return Get<long long>(node, path, "an integer");
}

bool GetBool(const YAML::Node& node, const std::string& path) {
  return Get<bool>(node, path, "true or false");
}

std::string GetString(const YAML::Node& node, const std::string& path) {
  return Get<std::string>(node, path, "a string");
}

long long GetPositive(const YAML::Node& node, const std::string& path) {
  const long long v = GetInt(node, path);
  if (v < 1) throw ConfigError(path, LineOf(node), "must be >= 1");
  return v;
}

std::vector<double> GetRealList(const YAML::Node& node,
                                const std::string& path) {
  if (!node.IsSequence()) {
    throw ConfigError(path, LineOf(node), "expected a list of numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(GetReal(node[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

CompressorSpec ParseCompressor(const YAML::Node& node,
                               const std::string& path) {
  CompressorSpec spec;
  if (node.IsMap()) {
    CheckKeys(node, path,
              {"kind", "k", "levels", "keep_prob", "mantissa_bits_zeroed",
               "clip_mode", "scale_mode"});
    if (!node["kind"]) {
      throw ConfigError(Join(path, "kind"), LineOf(node), "missing");
    }
  }
  // Node assignment writes through in yaml-cpp, so select without it.
  const YAML::Node kind_node = node.IsMap() ? node["kind"] : node;
  const std::string kind_path = node.IsMap() ? Join(path, "kind") : path;
  const std::string name = GetString(kind_node, kind_path);
  const auto kind = ParseCompressorKind(name);
  if (!kind) {
    throw ConfigError(kind_path, LineOf(kind_node),
                      "unknown compressor '" + name + "'");
  }
  spec.kind = *kind;
  if (node.IsMap()) {
    if (auto n = node["k"]) spec.k = GetInt(n, Join(path, "k"));
    if (auto n = node["levels"]) {
      spec.levels = static_cast<int>(GetInt(n, Join(path, "levels")));
    }
    if (auto n = node["keep_prob"]) {
      spec.keep_prob = GetReal(n, Join(path, "keep_prob"));
    }
    if (auto n = node["mantissa_bits_zeroed"]) {
      spec.mantissa_bits_zeroed =
          static_cast<int>(GetInt(n, Join(path, "mantissa_bits_zeroed")));
    }
    if (auto n = node["clip_mode"]) {
      const std::string mode = GetString(n, Join(path, "clip_mode"));
      if (mode == "binary") {
        spec.clip_mode = ClipMode::kBinary;
      } else if (mode == "decimal") {
        spec.clip_mode = ClipMode::kDecimal;
      } else {
        throw ConfigError(Join(path, "clip_mode"), LineOf(n),
                          "expected binary or decimal");
      }
    }
    if (auto n = node["scale_mode"]) {
      const std::string mode = GetString(n, Join(path, "scale_mode"));
      if (mode == "max_abs") {
        spec.scale_mode = TernaryScale::kMaxAbs;
      } else if (mode == "norm_ratio") {
        spec.scale_mode = TernaryScale::kNormRatio;
      } else {
        throw ConfigError(Join(path, "scale_mode"), LineOf(n),
                          "expected max_abs or norm_ratio");
      }
    }
  }
  try {
    spec.Validate();
  } catch (const Error& e) {
    throw ConfigError(path, LineOf(node), e.what());
  }
  return spec;
}

GammaSchedule ParseGamma(const YAML::Node& node, const std::string& path) {
  GammaSchedule g;
  if (node.IsScalar()) {
    g.value = GetReal(node, path);
    return g;
  }
  CheckKeys(node, path,
            {"mode", "value", "L", "sigma", "epsilon", "iterations_per_epoch",
             "decay_every", "decay_factor"});
  if (auto n = node["mode"]) {
    const std::string mode = GetString(n, Join(path, "mode"));
    const auto parsed = ParseGammaMode(mode);
    if (!parsed) {
      throw ConfigError(Join(path, "mode"), LineOf(n),
                        "expected constant, corollary or step");
    }
    g.mode = *parsed;
  }
  if (auto n = node["value"]) g.value = GetReal(n, Join(path, "value"));
  if (auto n = node["L"]) g.L = GetReal(n, Join(path, "L"));
  if (auto n = node["sigma"]) g.sigma = GetReal(n, Join(path, "sigma"));
  if (auto n = node["epsilon"]) g.epsilon = GetReal(n, Join(path, "epsilon"));
  if (auto n = node["iterations_per_epoch"]) {
    g.iterations_per_epoch = GetPositive(n, Join(path, "iterations_per_epoch"));
  }
  if (auto n = node["decay_every"]) {
    g.decay_every = GetPositive(n, Join(path, "decay_every"));
  }
  if (auto n = node["decay_factor"]) {
    g.decay_factor = GetReal(n, Join(path, "decay_factor"));
  }
  if (g.mode != GammaMode::kCorollary && g.value < 0.0) {
    throw ConfigError(Join(path, "value"), LineOf(node), "must be >= 0");
  }
  if (g.mode == GammaMode::kCorollary) {
    for (const char* key : {"L", "sigma", "epsilon"}) {
      if (!node[key]) {
        throw ConfigError(Join(path, key), LineOf(node),
                          "required in corollary mode");
      }
    }
  }
  return g;
}

void MergeProblem(const YAML::Node& node, const std::string& path,
                  ProblemSpec& p) {
  CheckKeys(node, path,
            {"kind", "dim", "noise_sigma", "heterogeneity", "curvature",
             "curvature_min", "curvature_max", "optimum", "random_optimum",
             "samples_per_worker", "batch_size", "class_separation", "l2",
             "hidden", "initial_point"});
  if (auto n = node["kind"]) {
    const std::string kind = GetString(n, Join(path, "kind"));
    const auto parsed = ParseProblemKind(kind);
    if (!parsed) {
      throw ConfigError(Join(path, "kind"), LineOf(n),
                        "unknown problem '" + kind + "'");
    }
    p.kind = *parsed;
  }
  auto size = [&](const char* key, std::size_t& field) {
    if (auto n = node[key]) {
      field = static_cast<std::size_t>(GetPositive(n, Join(path, key)));
    }
  };
  auto real = [&](const char* key, double& field) {
    if (auto n = node[key]) field = GetReal(n, Join(path, key));
  };
  auto list = [&](const char* key, std::vector<double>& field) {
    if (auto n = node[key]) field = GetRealList(n, Join(path, key));
  };
  size("dim", p.dim);
  real("noise_sigma", p.noise_sigma);
  real("heterogeneity", p.heterogeneity);
  list("curvature", p.curvature);
  real("curvature_min", p.curvature_min);
  real("curvature_max", p.curvature_max);
  list("optimum", p.optimum);
  if (auto n = node["random_optimum"]) {
    p.random_optimum = GetBool(n, Join(path, "random_optimum"));
  }
  size("samples_per_worker", p.samples_per_worker);
  size("batch_size", p.batch_size);
  real("class_separation", p.class_separation);
  real("l2", p.l2);
  size("hidden", p.hidden);
  list("initial_point", p.initial_point);
}

void MergeCost(const YAML::Node& node, const std::string& path,
               CostModel& c) {
  CheckKeys(node, path,
            {"server_bandwidth", "per_worker_compute", "wire_bits_per_real"});
  if (auto n = node["server_bandwidth"]) {
    c.server_bandwidth = GetReal(n, Join(path, "server_bandwidth"));
  }
  if (auto n = node["per_worker_compute"]) {
    c.per_worker_compute = GetReal(n, Join(path, "per_worker_compute"));
  }
  if (auto n = node["wire_bits_per_real"]) {
    c.wire_bits_per_real =
        static_cast<int>(GetInt(n, Join(path, "wire_bits_per_real")));
    if (c.wire_bits_per_real != 32 && c.wire_bits_per_real != 64) {
      throw ConfigError(Join(path, "wire_bits_per_real"), LineOf(n),
                        "must be 32 or 64");
    }
  }
}

// Fields shared by `defaults` and each run entry.
struct RunDraft {
  std::optional<std::string> name;
  TrainConfig config;
  bool has_algorithm = false;
  bool has_iterations = false;
};

void MergeRun(const YAML::Node& node, const std::string& path, RunDraft& d,
              bool allow_name) {
  if (allow_name) {
    CheckKeys(node, path,
              {"name", "algorithm", "workers", "iterations", "seed", "gamma",
               "compressor", "worker_compressor", "server_compressor",
               "problem", "cost", "record_analysis"});
  } else {
    CheckKeys(node, path,
              {"algorithm", "workers", "iterations", "seed", "gamma",
               "compressor", "worker_compressor", "server_compressor",
               "problem", "cost", "record_analysis"});
  }
  TrainConfig& c = d.config;
  if (auto n = node["name"]) d.name = GetString(n, Join(path, "name"));
  if (auto n = node["algorithm"]) {
    const std::string name = GetString(n, Join(path, "algorithm"));
    const auto parsed = ParseAlgorithm(name);
    if (!parsed) {
      throw ConfigError(Join(path, "algorithm"), LineOf(n),
                        "unknown algorithm '" + name + "'");
    }
    c.algorithm = *parsed;
    d.has_algorithm = true;
  }
  if (auto n = node["workers"]) {
    c.num_workers = static_cast<std::size_t>(
        GetPositive(n, Join(path, "workers")));
  }
  if (auto n = node["iterations"]) {
    c.iterations = GetPositive(n, Join(path, "iterations"));
    d.has_iterations = true;
  }
  if (auto n = node["seed"]) {
    c.seed = Get<uint64_t>(n, Join(path, "seed"), "a non-negative integer");
  }
  if (auto n = node["gamma"]) c.gamma = ParseGamma(n, Join(path, "gamma"));
  if (auto n = node["compressor"]) {
    c.worker_compressor = ParseCompressor(n, Join(path, "compressor"));
    c.server_compressor = c.worker_compressor;
  }
  if (auto n = node["worker_compressor"]) {
    c.worker_compressor = ParseCompressor(n, Join(path, "worker_compressor"));
  }
  if (auto n = node["server_compressor"]) {
    c.server_compressor = ParseCompressor(n, Join(path, "server_compressor"));
  }
  if (auto n = node["problem"]) MergeProblem(n, Join(path, "problem"), c.problem);
  if (auto n = node["cost"]) MergeCost(n, Join(path, "cost"), c.cost);
  if (auto n = node["record_analysis"]) {
    c.record_analysis = GetBool(n, Join(path, "record_analysis"));
  }
}

void ValidateRun(const NamedRun& run, const std::string& path, int line) {
  try {
    run.config.Validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, line, e.what());
  }
}

void ParseBatchSection(const YAML::Node& node, ExperimentBatch& batch) {
  CheckKeys(node, "batch",
            {"name", "out_dir", "paired", "checks", "parallel",
             "bandwidth_sweep"});
  if (auto n = node["name"]) batch.name = GetString(n, "batch.name");
  if (auto n = node["out_dir"]) batch.out_dir = GetString(n, "batch.out_dir");
  if (auto n = node["paired"]) batch.paired = GetBool(n, "batch.paired");
  if (auto n = node["checks"]) batch.checks = GetBool(n, "batch.checks");
  if (auto n = node["parallel"]) batch.parallel = GetBool(n, "batch.parallel");
  if (auto n = node["bandwidth_sweep"]) {
    batch.bandwidth_sweep = GetRealList(n, "batch.bandwidth_sweep");
    for (double b : batch.bandwidth_sweep) {
      if (!(b > 0.0)) {
        throw ConfigError("batch.bandwidth_sweep", LineOf(n),
                          "bandwidths must be > 0");
      }
    }
  }
}

void CheckUniqueNames(const ExperimentBatch& batch) {
  std::set<std::string> seen;
  for (const NamedRun& run : batch.runs) {
    if (!seen.insert(run.name).second) {
      throw ConfigError("runs", 0, "duplicate run name '" + run.name + "'");
    }
  }
}

}  // namespace

ExperimentBatch ParseConfig(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError("", 0, "empty config");
  CheckKeys(root, "", {"batch", "defaults", "runs"});

  ExperimentBatch batch;
  if (auto n = root["batch"]) ParseBatchSection(n, batch);
  batch.out_dir = root["batch"] && root["batch"]["out_dir"]
                      ? batch.out_dir
                      : std::filesystem::path("out") / batch.name;

  RunDraft defaults;
  if (auto n = root["defaults"]) MergeRun(n, "defaults", defaults, false);

  auto finish = [&](RunDraft d, const std::string& path, int line) {
    if (!d.has_algorithm) {
      throw ConfigError(Join(path, "algorithm"), line, "required");
    }
    if (!d.has_iterations) {
      throw ConfigError(Join(path, "iterations"), line, "required");
    }
    d.config.parallel_workers = batch.parallel;
    NamedRun run{d.name.value_or(std::string(AlgorithmName(d.config.algorithm))),
                 d.config};
    ValidateRun(run, path, line);
    batch.runs.push_back(std::move(run));
  };

  const YAML::Node runs = root["runs"];
  if (!runs) {
    finish(defaults, "defaults",
           root["defaults"] ? LineOf(root["defaults"]) : 0);
  } else {
    if (!runs.IsSequence() || runs.size() == 0) {
      throw ConfigError("runs", LineOf(runs), "expected a non-empty list");
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const std::string path = "runs[" + std::to_string(i) + "]";
      const YAML::Node entry = runs[i];
      if (batch.paired) {
        for (const char* key : {"seed", "problem", "workers"}) {
          if (entry.IsMap() && entry[key]) {
            throw ConfigError(Join(path, key), LineOf(entry[key]),
                              "not allowed in a paired batch; set it under "
                              "defaults");
          }
        }
      }
      RunDraft draft = defaults;
      draft.name.reset();
      MergeRun(entry, path, draft, true);
      finish(std::move(draft), path, LineOf(entry));
    }
  }
  CheckUniqueNames(batch);
  return batch;
}

ExperimentBatch LoadConfig(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw ConfigError("", 0, "cannot read config " + path.string());
  }
  std::ostringstream text;
  text << file.rdbuf();
  return ParseConfig(text.str());
}

void ApplyOverrides(ExperimentBatch& batch, const Overrides& o) {
  if (o.out_dir) batch.out_dir = *o.out_dir;
  if (o.checks) batch.checks = *o.checks;
  if (o.parallel) batch.parallel = *o.parallel;
  if (o.bandwidth_sweep) {
    for (double b : *o.bandwidth_sweep) {
      if (!(b > 0.0)) {
        throw ConfigError("--bandwidth-sweep", 0, "bandwidths must be > 0");
      }
    }
    batch.bandwidth_sweep = *o.bandwidth_sweep;
  }
  for (std::size_t i = 0; i < batch.runs.size(); ++i) {
    TrainConfig& c = batch.runs[i].config;
    if (o.algorithm) c.algorithm = *o.algorithm;
    if (o.workers) c.num_workers = *o.workers;
    if (o.iterations) c.iterations = *o.iterations;
    if (o.lr) {
      c.gamma = GammaSchedule{};
      c.gamma.value = *o.lr;
    }
    if (o.seed) c.seed = *o.seed;
    c.parallel_workers = batch.parallel;
    ValidateRun(batch.runs[i], "runs[" + std::to_string(i) + "]", 0);
  }
  if (o.algorithm) {
    // Runs named after their old algorithm would now mislead.
    for (NamedRun& run : batch.runs) {
      if (ParseAlgorithm(run.name)) {
        run.name = std::string(AlgorithmName(*o.algorithm));
      }
    }
  }
  CheckUniqueNames(batch);
}

std::vector<CheckVerdict> RunCheckers(const TrainConfig& cfg,
                                      const Trajectory& trajectory) {
  std::vector<CheckVerdict> out;
  const bool carries_residuals = cfg.algorithm == Algorithm::kDoubleSqueeze ||
                                 cfg.algorithm == Algorithm::kMemSgd ||
                                 cfg.algorithm == Algorithm::kVanilla;

  CheckVerdict closed;
  closed.name = "closed_form_update";
  closed.threshold = kClosedFormTolerance;
  if (carries_residuals && !trajectory.steps.empty()) {
    closed.value = MaxClosedFormDeviation(trajectory);
    closed.pass = closed.value <= closed.threshold;
    closed.detail = "max per-step deviation";
  } else {
    closed.applicable = false;
    closed.detail = "scheme keeps no residuals";
  }
  out.push_back(closed);

  CheckVerdict tele;
  tele.name = "telescoping";
  tele.threshold = kTelescopingTolerance;
  const bool constant_gamma = cfg.gamma.mode != GammaMode::kStep ||
                              ResolveGamma(cfg, 0) ==
                                  ResolveGamma(cfg, cfg.iterations - 1);
  if (carries_residuals && constant_gamma && !trajectory.steps.empty()) {
    tele.value = TelescopingCheck(trajectory);
    tele.pass = tele.value <= tele.threshold;
    tele.detail = "relative residual";
  } else {
    tele.applicable = false;
    tele.detail = carries_residuals ? "step size not constant"
                                    : "scheme keeps no residuals";
  }
  out.push_back(tele);

  CheckVerdict bound;
  bound.name = "residual_bound";
  StepConfig step;
  step.worker_compressor = cfg.worker_compressor;
  step.server_compressor = cfg.server_compressor;
  auto alpha_sq = [&](const CompressorSpec& s) -> std::optional<double> {
    if (s.kind == CompressorKind::kIdentity) return 0.0;
    if (s.kind == CompressorKind::kTopK && !trajectory.steps.empty()) {
      const double d = static_cast<double>(trajectory.steps[0].x.dim());
      return 1.0 - std::min(static_cast<double>(s.k), d) / d;
    }
    return std::nullopt;
  };
  const auto a_worker =
      alpha_sq(EffectiveWorkerCompressor(cfg.algorithm, step));
  const auto a_server =
      alpha_sq(EffectiveServerCompressor(cfg.algorithm, step));
  if (carries_residuals && a_worker && a_server) {
    BoundParams params;
    params.sigma = cfg.problem.noise_sigma;
    params.alpha_sq = std::max(*a_worker, *a_server);
    const auto reports = ResidualBoundCheck(trajectory, params);
    bound.pass = true;
    double worst_ratio = 0.0;
    bool vacuous = false;
    for (const ResidualBoundReport& r : reports) {
      vacuous = vacuous || r.vacuous;
      if (r.violated) {
        bound.pass = false;
        bound.detail += r.site + " max " + FormatReal(r.max_residual_sq) +
                        " > bound " + FormatReal(r.bound) + "; ";
      }
      if (!r.vacuous && r.bound > 0.0) {
        worst_ratio = std::max(worst_ratio, r.max_residual_sq / r.bound);
      }
    }
    bound.value = worst_ratio;
    bound.threshold = 1.0;
    if (vacuous) {
      // (1 + rho) alpha^2 >= 1 for every grid rho: nothing to check.
      bound.applicable = false;
      bound.detail = "bound vacuous for every rho";
    } else if (bound.detail.empty()) {
      bound.detail = "max residual / bound over all sites";
    }
  } else {
    bound.applicable = false;
    bound.detail = "needs identity or top_k compression with residuals";
  }
  out.push_back(bound);
  return out;
}

BatchResult ExecuteBatch(const ExperimentBatch& batch) {
  BatchResult result;
  for (const NamedRun& run : batch.runs) {
    TrainConfig cfg = run.config;
    cfg.parallel_workers = batch.parallel;
    if (batch.checks) cfg.record_analysis = true;
    RunResult r = RunExperiment(cfg);
    RunOutcome outcome{run.name, run.config, std::move(r.metrics), {}, {}};
    outcome.summary = Summarize(outcome.metrics);
    if (batch.checks && r.trajectory) {
      outcome.checks = RunCheckers(cfg, *r.trajectory);
      for (const CheckVerdict& v : outcome.checks) {
        if (v.applicable && !v.pass) result.checks_failed = true;
      }
    }
    result.runs.push_back(std::move(outcome));
  }
  return result;
}

double MeanIterationTime(const Summary& summary, const CostModel& cost,
                         double bandwidth) {
  const double bits_per_iter = static_cast<double>(summary.total_bits) /
                               static_cast<double>(summary.iterations);
  return cost.per_worker_compute + bits_per_iter / bandwidth;
}

std::string SummaryCsv(const BatchResult& result) {
  std::string out =
      "name,algorithm,iterations,final_loss,theorem_metric,total_bits_up,"
      "total_bits_down,total_bits,sim_time_s,max_server_delta_norm,"
      "max_worker_delta_norm\n";
  for (const RunOutcome& r : result.runs) {
    const Summary& s = r.summary;
    out += r.name + "," + std::string(AlgorithmName(r.config.algorithm)) +
           "," + std::to_string(s.iterations) + "," + FormatReal(s.final_loss) +
           "," + FormatReal(s.theorem_metric) + "," +
           std::to_string(s.total_bits_up) + "," +
           std::to_string(s.total_bits_down) + "," +
           std::to_string(s.total_bits) + "," +
           FormatReal(s.total_sim_time_s) + "," +
           FormatReal(s.max_server_delta_norm) + "," +
           FormatReal(s.max_worker_delta_norm) + "\n";
  }
  return out;
}

namespace {

std::string Pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string Short(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string SummaryText(const BatchResult& result) {
  std::size_t w = 6;
  for (const RunOutcome& r : result.runs) w = std::max(w, r.name.size() + 2);
  std::string out = Pad("run", w) + Pad("algorithm", 15) +
                    Pad("final_loss", 14) + Pad("theorem_metric", 16) +
                    Pad("total_bits", 16) + "sim_time_s\n";
  for (const RunOutcome& r : result.runs) {
    out += Pad(r.name, w) +
           Pad(std::string(AlgorithmName(r.config.algorithm)), 15) +
           Pad(Short(r.summary.final_loss), 14) +
           Pad(Short(r.summary.theorem_metric), 16) +
           Pad(std::to_string(r.summary.total_bits), 16) +
           Short(r.summary.total_sim_time_s) + "\n";
  }
  return out;
}

std::string BandwidthSweepCsv(const BatchResult& result,
                              const std::vector<double>& bandwidths) {
  std::string out = "bandwidth_bits_per_s,inverse_bandwidth";
  for (const RunOutcome& r : result.runs) out += "," + r.name;
  out += "\n";
  for (double b : bandwidths) {
    out += FormatReal(b) + "," + FormatReal(1.0 / b);
    for (const RunOutcome& r : result.runs) {
      out += "," + FormatReal(MeanIterationTime(r.summary, r.config.cost, b));
    }
    out += "\n";
  }
  return out;
}

std::string ReportText(const ExperimentBatch& batch,
                       const BatchResult& result) {
  std::string out = "batch: " + batch.name + "\n";
  out += std::string("paired: ") + (batch.paired ? "yes" : "no") + "\n\n";
  out += "== summary ==\n" + SummaryText(result);
  if (!batch.bandwidth_sweep.empty()) {
    out += "\n== seconds per iteration vs. server bandwidth ==\n";
    std::size_t w = 14;
    std::string header = Pad("bits/s", w);
    for (const RunOutcome& r : result.runs) {
      header += Pad(r.name, std::max<std::size_t>(14, r.name.size() + 2));
    }
    out += header + "\n";
    for (double b : batch.bandwidth_sweep) {
      std::string line = Pad(Short(b), w);
      for (const RunOutcome& r : result.runs) {
        line += Pad(Short(MeanIterationTime(r.summary, r.config.cost, b)),
                    std::max<std::size_t>(14, r.name.size() + 2));
      }
      out += line + "\n";
    }
  }
  if (batch.checks) {
    out += "\n== checks ==\n";
    for (const RunOutcome& r : result.runs) {
      for (const CheckVerdict& v : r.checks) {
        out += Pad(r.name, 16) + Pad(v.name, 22);
        if (!v.applicable) {
          out += "n/a   (" + v.detail + ")\n";
          continue;
        }
        out += std::string(v.pass ? "PASS" : "FAIL") + "  " + v.detail +
               " = " + Short(v.value) + " (limit " + Short(v.threshold) +
               ")\n";
      }
    }
    out += std::string("\noverall: ") +
           (result.checks_failed ? "FAIL" : "PASS") + "\n";
  }
  return out;
}

namespace {

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file || !(file << text) || !file.flush()) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
}

}  // namespace

void EmitReport(const ExperimentBatch& batch, const BatchResult& result) {
  if (result.runs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no results to report");
  }
  std::error_code ec;
  std::filesystem::create_directories(batch.out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create " + batch.out_dir.string() +
                                    ": " + ec.message());
  }
  for (const RunOutcome& r : result.runs) {
    WriteMetricsCsv(batch.out_dir / (r.name + ".csv"), r.metrics);
  }
  WriteFile(batch.out_dir / "summary.csv", SummaryCsv(result));
  WriteFile(batch.out_dir / "summary.txt", SummaryText(result));
  if (!batch.bandwidth_sweep.empty()) {
    WriteFile(batch.out_dir / "bandwidth_sweep.csv",
              BandwidthSweepCsv(result, batch.bandwidth_sweep));
  }
  WriteFile(batch.out_dir / "report.txt", ReportText(batch, result));
}

int RunBatch(const ExperimentBatch& batch, std::ostream& log) {
  BatchResult result;
  try {
    result = ExecuteBatch(batch);
    EmitReport(batch, result);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  log << SummaryText(result);
  log << "wrote " << batch.out_dir.string() << "\n";
  if (batch.checks && result.checks_failed) {
    log << "checks failed; see " << (batch.out_dir / "report.txt").string()
        << "\n";
    return kExitCheckFailure;
  }
  return kExitOk;
}

}  // namespace dsqueeze
