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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dsqueeze/algorithms.h"
#include "dsqueeze/analysis.h"
#include "dsqueeze/compressor.h"
#include "dsqueeze/problem.h"
#include "dsqueeze/rng.h"
#include "dsqueeze/simulator.h"

namespace dsqueeze {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

TrainConfig NoisyQuadratic(Algorithm algorithm, const CompressorSpec& spec,
                           std::size_t d, std::size_t n, long long T) {
  TrainConfig cfg;
  cfg.algorithm = algorithm;
  cfg.worker_compressor = spec;
  cfg.server_compressor = spec;
  cfg.num_workers = n;
  cfg.iterations = T;
  cfg.gamma.value = 0.05;
  cfg.seed = 20260101;
  cfg.problem.kind = ProblemKind::kQuadratic;
  cfg.problem.dim = d;
  cfg.problem.noise_sigma = 1.0;
  cfg.problem.heterogeneity = 0.5;
  cfg.problem.curvature_min = 0.5;
  cfg.problem.curvature_max = 2.0;
  return cfg;
}

std::vector<CompressorSpec> EveryKind(std::size_t d) {
  return {CompressorSpec::Identity(),
          CompressorSpec::OneBit(),
          CompressorSpec::TopK(static_cast<int64_t>(d / 4)),
          CompressorSpec::Ternary(TernaryScale::kMaxAbs),
          CompressorSpec::RandomQuantize(4),
          CompressorSpec::RandomSparsify(0.7),
          CompressorSpec::Clip(20, ClipMode::kBinary)};
}

// 1. Identity compression makes doublesqueeze and memsgd plain SGD.
Outcome IdentityEquivalence() {
  std::vector<Trajectory> runs;
  for (Algorithm a :
       {Algorithm::kDoubleSqueeze, Algorithm::kMemSgd, Algorithm::kVanilla}) {
    TrainConfig cfg =
        NoisyQuadratic(a, CompressorSpec::Identity(), 50, 4, 1000);
    cfg.record_analysis = true;
    runs.push_back(*RunExperiment(cfg).trajectory);
  }
  double worst = 0.0;
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t t = 0; t < runs[2].steps.size(); ++t) {
      worst = std::max(worst,
                       MaxAbsDiff(runs[r].steps[t].x, runs[2].steps[t].x));
    }
    worst = std::max(worst, MaxAbsDiff(*runs[r].final_x, *runs[2].final_x));
  }
  return {worst <= 1e-12, "max elementwise deviation " + Num(worst) +
                              " (limit 1e-12)"};
}

// 2. Every step equals -gamma(g + Omega_{t-1} - Omega_t).
Outcome ClosedFormEquivalence() {
  double worst = 0.0;
  std::string where;
  for (ProblemKind kind : {ProblemKind::kQuadratic, ProblemKind::kLogistic}) {
    for (std::size_t n : {1, 8}) {
      for (const CompressorSpec& spec : EveryKind(20)) {
        TrainConfig cfg =
            NoisyQuadratic(Algorithm::kDoubleSqueeze, spec, 20, n, 200);
        cfg.problem.kind = kind;
        if (kind == ProblemKind::kLogistic) cfg.problem.noise_sigma = 0.0;
        cfg.record_analysis = true;
        const double dev =
            MaxClosedFormDeviation(*RunExperiment(cfg).trajectory);
        if (dev >= worst) {
          worst = dev;
          where = spec.ToString() + ", n=" + std::to_string(n) + ", " +
                  std::string(ProblemKindName(kind));
        }
      }
    }
  }
  return {worst <= 1e-10, "28 configs, max per-step deviation " + Num(worst) +
                              " at " + where + " (limit 1e-10)"};
}

// 3. (x_0 - x_T) = gamma (sum g_t - Omega_{T-1}).
Outcome Telescoping() {
  double worst = 0.0;
  for (const CompressorSpec& spec :
       {CompressorSpec::TopK(10), CompressorSpec::OneBit()}) {
    TrainConfig cfg =
        NoisyQuadratic(Algorithm::kDoubleSqueeze, spec, 100, 4, 1000);
    cfg.record_analysis = true;
    worst = std::max(worst, TelescopingCheck(*RunExperiment(cfg).trajectory));
  }
  return {worst <= 1e-8,
          "max relative residual " + Num(worst) + " (limit 1e-8)"};
}

// 4. Monte-Carlo means of the unbiased compressors.
Outcome Unbiasedness() {
  const int draws = 100000;
  const std::size_t d = 10;
  int failures = 0;
  int checked = 0;
  double worst_z = 0.0;
  const std::vector<CompressorSpec> specs{
      CompressorSpec::RandomQuantize(4), CompressorSpec::RandomSparsify(0.3),
      CompressorSpec::Ternary(TernaryScale::kMaxAbs)};
  for (std::size_t s = 0; s < specs.size(); ++s) {
    for (uint32_t v = 0; v < 20; ++v) {
      const DenseVector x(
          DrawNormal(RngStream(404, {v, 0, Purpose::kTest}), d));
      std::vector<double> sum(d, 0.0);
      std::vector<double> sq(d, 0.0);
      for (int i = 0; i < draws; ++i) {
        const RngStream rng(404 + s, {v, static_cast<uint32_t>(i),
                                      Purpose::kWorkerCompress});
        const DenseVector r = Reconstruct(Compress(specs[s], x, rng));
        for (std::size_t j = 0; j < d; ++j) {
          sum[j] += r[j];
          sq[j] += r[j] * r[j];
        }
      }
      for (std::size_t j = 0; j < d; ++j) {
        const double mean = sum[j] / draws;
        const double var = std::max(0.0, sq[j] / draws - mean * mean);
        const double se = std::sqrt(var / draws);
        const double err = std::abs(mean - x[j]);
        // Deterministic coordinates have se = 0. Allow the worst-case error
        // of summing `draws` terms, draws * eps * |x|.
        const double slack =
            draws * std::numeric_limits<double>::epsilon() * std::abs(x[j]);
        ++checked;
        if (err > 4 * se + slack) ++failures;
        if (se > 0) worst_z = std::max(worst_z, err / se);
      }
    }
  }
  return {failures == 0, std::to_string(checked) + " coordinate means, " +
                             std::to_string(failures) +
                             " beyond 4 SE, worst z " + Num(worst_z)};
}

// 5. E||xi_t||^2 = sigma^2 / n at a fixed point.
Outcome VarianceScaling() {
  bool pass = true;
  std::string detail;
  for (std::size_t n : {1, 4, 16}) {
    ProblemSpec spec;
    spec.dim = 10;
    spec.noise_sigma = 1.0;
    spec.heterogeneity = 0.5;
    const auto problem = MakeProblem(spec, n, 55);
    const DenseVector x(DrawNormal(RngStream(55, {0, 0, Purpose::kTest}), 10));
    const DenseVector full = problem->FullGrad(x);
    const int draws = 10000;
    double total = 0.0;
    for (int t = 0; t < draws; ++t) {
      std::vector<DenseVector> grads;
      for (uint32_t i = 0; i < n; ++i) {
        grads.push_back(problem->StochasticGrad(
            x, SampleDraw{55, i, static_cast<uint32_t>(t)}));
      }
      total += SquaredNorm(ComputeXi(full, grads));
    }
    const double expected = 1.0 / static_cast<double>(n);
    const double rel = std::abs(total / draws - expected) / expected;
    pass = pass && rel <= 0.15;
    detail += "n=" + std::to_string(n) + ": " + Num(total / draws) + " vs " +
              Num(expected) + "; ";
  }
  return {pass, detail + "tolerance 15%"};
}

// 6. Residuals of top_k (k = d/2) stay under the geometric-series bound
// and do not trend upward.
Outcome ResidualBoundedness() {
  const std::size_t d = 100;
  TrainConfig cfg = NoisyQuadratic(
      Algorithm::kDoubleSqueeze, CompressorSpec::TopK(d / 2), d, 8, 5000);
  cfg.record_analysis = true;
  const RunResult run = RunExperiment(cfg);
  BoundParams params;
  params.sigma = 1.0;
  params.alpha_sq = 0.5;
  double worst_ratio = 0.0;
  bool bounded = true;
  for (const ResidualBoundReport& r :
       ResidualBoundCheck(*run.trajectory, params)) {
    bounded = bounded && !r.vacuous && !r.violated;
    worst_ratio = std::max(worst_ratio, r.max_residual_sq / r.bound);
  }
  std::vector<double> server;
  std::vector<double> worker;
  for (const MetricsRow& row : run.metrics) {
    server.push_back(row.server_delta_norm);
    worker.push_back(row.max_worker_delta_norm);
  }
  const TrendReport ts = ResidualTrend(server);
  const TrendReport tw = ResidualTrend(worker);
  const bool flat = !ts.upward && !tw.upward;
  return {bounded && flat,
          "max residual/bound " + Num(worst_ratio) + " (limit 1); tail slope " +
              "server " + Num(ts.slope) + ", worker " + Num(tw.slope) +
              (flat ? " (no upward trend)" : " (upward trend)")};
}

// 7. Error compensation beats plain top-1 on the crafted quadratic.
Outcome CompensationBenefit() {
  // Counts from tests/oracles/crafted_quadratic.py.
  constexpr long long kReferenceDoubleSqueeze = 65;
  constexpr long long kReferenceMemSgd = 65;
  constexpr long long kReferenceTopK = 86;
  const QuadraticProblem problem({4.0, 1.0}, {0.0, 0.0}, {{0.0, 0.0}}, 0.0,
                                 {1.0, 1.0});
  auto count = [&](Algorithm a) -> long long {
    TrainConfig cfg;
    cfg.algorithm = a;
    cfg.worker_compressor = CompressorSpec::TopK(1);
    cfg.server_compressor = CompressorSpec::TopK(1);
    cfg.iterations = 1000;
    cfg.gamma.value = 0.1;
    for (const MetricsRow& row : RunExperiment(cfg, problem).metrics) {
      if (row.grad_norm_sq <= 1e-6) return row.iter;
    }
    return -1;
  };
  const long long ds = count(Algorithm::kDoubleSqueeze);
  const long long mem = count(Algorithm::kMemSgd);
  const long long topk = count(Algorithm::kTopKSgd);
  const bool pass = ds >= 0 && topk >= 0 && ds < topk &&
                    ds == kReferenceDoubleSqueeze && mem == kReferenceMemSgd &&
                    topk == kReferenceTopK;
  return {pass, "iterations to ||grad||^2 <= 1e-6: doublesqueeze " +
                    std::to_string(ds) + ", memsgd " + std::to_string(mem) +
                    ", topk_sgd " + std::to_string(topk) + " (reference " +
                    std::to_string(kReferenceDoubleSqueeze) + "/" +
                    std::to_string(kReferenceMemSgd) + "/" +
                    std::to_string(kReferenceTopK) + ")"};
}

// 8. Corollary step size: close to vanilla and decreasing with T.
Outcome CorollaryRate() {
  const long long T = 20000;
  auto config = [&](Algorithm a) {
    TrainConfig cfg = NoisyQuadratic(a, CompressorSpec::TopK(10), 100, 8, T);
    cfg.gamma.mode = GammaMode::kCorollary;
    cfg.gamma.L = 2.0;  // the largest curvature
    cfg.gamma.sigma = 1.0;
    cfg.gamma.epsilon = 1.0;
    return cfg;
  };
  const TrainConfig ds_cfg = config(Algorithm::kDoubleSqueeze);
  const double gamma = ResolveGamma(ds_cfg);
  const RunResult ds = RunExperiment(ds_cfg);
  const RunResult vanilla = RunExperiment(config(Algorithm::kVanilla));
  const double m_ds = Summarize(ds.metrics).theorem_metric;
  const double m_van = Summarize(vanilla.metrics).theorem_metric;
  const double m_short =
      Summarize(std::span<const MetricsRow>(ds.metrics).first(2000))
          .theorem_metric;
  const bool pass = m_ds <= 2 * m_van && m_ds <= 0.5 * m_short;
  return {pass, "gamma " + Num(gamma) + "; metric T=20000 " + Num(m_ds) +
                    ", vanilla " + Num(m_van) + " (ratio " +
                    Num(m_ds / m_van) + ", limit 2), T=2000 " +
                    Num(m_short) + " (ratio " + Num(m_ds / m_short) +
                    ", limit 0.5)"};
}

// 9. Bit totals and the affine time model at d = 10^6, n = 8.
Outcome CommunicationCost() {
  const std::size_t d = 1000000;
  const std::size_t n = 8;
  ProblemSpec spec;
  spec.dim = d;
  spec.curvature_min = 0.5;
  spec.curvature_max = 2.0;
  const auto problem = MakeProblem(spec, n, 9);
  const ClusterState state = ClusterState::Initial(problem->InitialPoint(), n);
  StepConfig step;
  step.worker_compressor = CompressorSpec::OneBit();
  step.server_compressor = CompressorSpec::OneBit();
  step.wire_bits_per_real = 32;
  auto total = [&](Algorithm a) {
    const StepReport r = RunStep(a, state, *problem, step).report;
    return r;
  };
  const StepReport van = total(Algorithm::kVanilla);
  const StepReport ds = total(Algorithm::kDoubleSqueeze);
  const StepReport mem = total(Algorithm::kMemSgd);
  const int64_t bv = van.bits_up + van.bits_down;
  const int64_t bd = ds.bits_up + ds.bits_down;
  const int64_t bm = mem.bits_up + mem.bits_down;
  bool pass = bv == 512000000 && bd == 16000512 &&
              bm == 8 * (1000000 + 32) + 8 * 32 * 1000000LL;

  // Time per iteration at five bandwidths: affine in 1 / bandwidth.
  const double bandwidths[] = {1e6, 1e7, 1e8, 1e9, 1e10};
  double worst = 0.0;
  for (const StepReport* r : {&van, &ds, &mem}) {
    const double bits = static_cast<double>(r->bits_up + r->bits_down);
    CostModel cost;
    cost.per_worker_compute = 0.01;
    std::vector<double> times;
    for (double b : bandwidths) {
      cost.server_bandwidth = b;
      times.push_back(IterationTime(*r, cost));
      const double expected = 0.01 + bits / b;
      worst = std::max(worst, std::abs(times.back() - expected) / expected);
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double slope = (times[i - 1] - times[i]) /
                           (1 / bandwidths[i - 1] - 1 / bandwidths[i]);
      worst = std::max(worst, std::abs(slope - bits) / bits);
    }
  }
  pass = pass && worst <= 1e-12;
  return {pass, "bits/iter vanilla " + std::to_string(bv) + ", doublesqueeze " +
                    std::to_string(bd) + " (" +
                    Num(static_cast<double>(bv) / static_cast<double>(bd)) +
                    "x less), memsgd " + std::to_string(bm) + " (" +
                    Num(static_cast<double>(bv) / static_cast<double>(bm)) +
                    "x less); time model rel err " + Num(worst) +
                    " (limit 1e-12)"};
}

std::string ReadBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// 10. Repeated and worker-parallel runs write identical CSV bytes.
Outcome Determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "dsq_acceptance";
  std::filesystem::create_directories(dir);
  int configs = 0;
  int mismatches = 0;
  for (ProblemKind kind :
       {ProblemKind::kQuadratic, ProblemKind::kLogistic, ProblemKind::kMlp}) {
    for (Algorithm a : {Algorithm::kDoubleSqueeze, Algorithm::kMemSgd,
                        Algorithm::kQsgd, Algorithm::kTopKSgd,
                        Algorithm::kVanilla}) {
      TrainConfig cfg = NoisyQuadratic(
          a,
          a == Algorithm::kQsgd ? CompressorSpec::Ternary(TernaryScale::kMaxAbs)
                                : CompressorSpec::TopK(3),
          8, 6, 300);
      cfg.problem.kind = kind;
      cfg.problem.hidden = 4;
      cfg.server_compressor = CompressorSpec::RandomQuantize(8);
      std::vector<std::string> bytes;
      for (bool parallel : {false, false, true}) {
        cfg.parallel_workers = parallel;
        const auto path = dir / ("run" + std::to_string(bytes.size()) + ".csv");
        WriteMetricsCsv(path, RunExperiment(cfg).metrics);
        bytes.push_back(ReadBytes(path));
      }
      ++configs;
      if (bytes[0] != bytes[1] || bytes[0] != bytes[2] || bytes[0].empty()) {
        ++mismatches;
      }
    }
  }
  std::filesystem::remove_all(dir);
  return {mismatches == 0,
          std::to_string(configs) + " configs x (repeat, parallel): " +
              std::to_string(mismatches) + " mismatching CSVs"};
}

// 11. Central finite differences agree with every analytic gradient.
Outcome GradientOracles() {
  double worst = 0.0;
  for (ProblemKind kind :
       {ProblemKind::kQuadratic, ProblemKind::kLogistic, ProblemKind::kMlp}) {
    ProblemSpec spec;
    spec.kind = kind;
    spec.dim = 6;
    spec.hidden = 5;
    spec.samples_per_worker = 64;
    spec.heterogeneity = 0.5;
    spec.curvature_min = 0.5;
    spec.curvature_max = 4.0;
    const auto problem = MakeProblem(spec, 3, 77);
    const std::size_t dim = problem->dim();
    for (uint32_t p = 0; p < 10; ++p) {
      std::vector<double> x =
          DrawNormal(RngStream(77, {p, 0, Purpose::kTest}), dim);
      const DenseVector analytic = problem->FullGrad(DenseVector(x));
      std::vector<double> fd(dim);
      const double h = 1e-6;
      for (std::size_t j = 0; j < dim; ++j) {
        const double saved = x[j];
        x[j] = saved + h;
        const double up = problem->Loss(DenseVector(x));
        x[j] = saved - h;
        const double down = problem->Loss(DenseVector(x));
        x[j] = saved;
        fd[j] = (up - down) / (2 * h);
      }
      const DenseVector numeric(fd);
      const double scale =
          std::max({L2Norm(analytic), L2Norm(numeric), 1e-8});
      worst = std::max(worst, L2Norm(Subtract(analytic, numeric)) / scale);
    }
  }
  return {worst <= 1e-5, "30 points over 3 problem kinds, max relative error " +
                             Num(worst) + " (limit 1e-5)"};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;  // 0 means no limit
  std::function<Outcome()> run;
};

int Main() {
  const std::vector<Criterion> criteria{
      {1, "identity-compression equivalence", 5, IdentityEquivalence},
      {2, "closed-form update equivalence", 10, ClosedFormEquivalence},
      {3, "telescoping conservation", 5, Telescoping},
      {4, "unbiased compressors", 30, Unbiasedness},
      {5, "variance scaling", 30, VarianceScaling},
      {6, "residual boundedness", 10, ResidualBoundedness},
      {7, "error-compensation benefit", 1, CompensationBenefit},
      {8, "corollary step size", 60, CorollaryRate},
      {9, "communication cost", 1, CommunicationCost},
      {10, "determinism", 0, Determinism},
      {11, "gradient oracles", 5, GradientOracles},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    const bool in_time = c.time_limit_s == 0 || secs < c.time_limit_s;
    const bool pass = out.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s [%d] %s: %s; %.2f s", pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), secs);
    if (c.time_limit_s > 0) std::printf(" (limit %g s)", c.time_limit_s);
    std::printf("\n");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace dsqueeze

int main() { return dsqueeze::Main(); }
