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

#include <cmath>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "dsqueeze/algorithms.h"
#include "dsqueeze/analysis.h"
#include "dsqueeze/error.h"
#include "dsqueeze/problem.h"

namespace dsqueeze {
namespace {

// Zero curvature makes every worker's gradient the constant b_i.
QuadraticProblem ConstantGrads(std::vector<std::vector<double>> grads) {
  const std::size_t d = grads.front().size();
  return QuadraticProblem(std::vector<double>(d, 0.0),
                          std::vector<double>(d, 0.0), std::move(grads), 0.0);
}

StepConfig Config(CompressorSpec worker, CompressorSpec server, double gamma) {
  StepConfig cfg;
  cfg.worker_compressor = worker;
  cfg.server_compressor = server;
  cfg.gamma = gamma;
  cfg.seed = 17;
  return cfg;
}

std::unique_ptr<Problem> NoisyQuadratic(std::size_t d, std::size_t n,
                                        uint64_t seed) {
  ProblemSpec spec;
  spec.dim = d;
  spec.noise_sigma = 1.0;
  spec.heterogeneity = 0.5;
  spec.curvature_min = 0.5;
  spec.curvature_max = 2.0;
  return MakeProblem(spec, n, seed);
}

TEST(AlgorithmNameTest, RoundTrip) {
  for (Algorithm a : {Algorithm::kDoubleSqueeze, Algorithm::kMemSgd,
                      Algorithm::kQsgd, Algorithm::kTopKSgd,
                      Algorithm::kVanilla}) {
    EXPECT_EQ(ParseAlgorithm(AlgorithmName(a)), a);
  }
  EXPECT_EQ(ParseAlgorithm("topk_sgd"), Algorithm::kTopKSgd);
  EXPECT_FALSE(ParseAlgorithm("adam"));
}

TEST(DoubleSqueezeStepTest, ReducesToGradientDescent) {
  // f = x^2 / 2 from x = 1.
  const QuadraticProblem p({1.0}, {0.0}, {{0.0}}, 0.0, {1.0});
  const auto state = ClusterState::Initial(p.InitialPoint(), 1);
  const auto r = DoubleSqueezeStep(
      state, p,
      Config(CompressorSpec::Identity(), CompressorSpec::Identity(), 0.1));
  EXPECT_DOUBLE_EQ(r.state.x[0], 0.9);
  EXPECT_EQ(r.state.t, 1u);
}

TEST(DoubleSqueezeStepTest, AveragesWorkers) {
  const auto p = ConstantGrads({{2.0}, {4.0}});
  const auto r = DoubleSqueezeStep(
      ClusterState::Initial({0.0}, 2), p,
      Config(CompressorSpec::Identity(), CompressorSpec::Identity(), 1.0));
  EXPECT_EQ(r.state.x, DenseVector({-3.0}));
  EXPECT_EQ(r.report.applied_update, DenseVector({-3.0}));
}

TEST(DoubleSqueezeStepTest, TopOneHandTrace) {
  const auto p = ConstantGrads({{1.0, 2.0}});
  const auto r = DoubleSqueezeStep(
      ClusterState::Initial({0.0, 0.0}, 1), p,
      Config(CompressorSpec::TopK(1), CompressorSpec::TopK(1), 1.0));
  EXPECT_EQ(r.state.x, DenseVector({0.0, -2.0}));
  EXPECT_EQ(r.state.worker_residuals[0].delta(), DenseVector({1.0, 0.0}));
  EXPECT_EQ(r.state.server_residual.delta(), DenseVector({0.0, 0.0}));
  // Step 2: worker sends v = [2, 2] -> [2, 0] (tie to the lower index).
  const auto r2 = DoubleSqueezeStep(
      r.state, p, Config(CompressorSpec::TopK(1), CompressorSpec::TopK(1), 1.0));
  EXPECT_EQ(r2.state.x, DenseVector({-2.0, -2.0}));
  EXPECT_EQ(r2.state.worker_residuals[0].delta(), DenseVector({0.0, 2.0}));
}

TEST(DoubleSqueezeStepTest, AppliedUpdateIsScaledServerMessage) {
  const auto p = NoisyQuadratic(20, 4, 5);
  const auto cfg = Config(CompressorSpec::TopK(4), CompressorSpec::OneBit(), 0.05);
  auto state = ClusterState::Initial(p->InitialPoint(), 4);
  for (int t = 0; t < 10; ++t) {
    const auto r = DoubleSqueezeStep(state, *p, cfg);
    EXPECT_EQ(Subtract(r.state.x, state.x).dim(), 20u);
    for (std::size_t j = 0; j < 20; ++j) {
      EXPECT_EQ(r.state.x[j], state.x[j] + r.report.applied_update[j]);
    }
    state = r.state;
  }
}

TEST(DoubleSqueezeStepTest, DimensionMismatch) {
  const auto p = ConstantGrads({{1.0, 2.0}});
  const StepConfig cfg =
      Config(CompressorSpec::Identity(), CompressorSpec::Identity(), 1.0);
  try {
    DoubleSqueezeStep(ClusterState::Initial({0.0, 0.0, 0.0}, 1), p, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  EXPECT_THROW(DoubleSqueezeStep(ClusterState::Initial({0.0, 0.0}, 2), p, cfg),
               Error);
}

TEST(BitsTest, UpAndDownAccounting) {
  const auto p = NoisyQuadratic(100, 3, 1);
  const auto state = ClusterState::Initial(p->InitialPoint(), 3);
  const auto ds = DoubleSqueezeStep(
      state, *p, Config(CompressorSpec::OneBit(), CompressorSpec::TopK(5), 0.1));
  EXPECT_EQ(ds.report.bits_up, 3 * (100 + 32));
  EXPECT_EQ(ds.report.bits_down, 3 * 5 * (32 + 7));
  const auto mem = MemSgdStep(
      state, *p, Config(CompressorSpec::TopK(5), CompressorSpec::TopK(5), 0.1));
  EXPECT_EQ(mem.report.bits_up, 3 * 5 * (32 + 7));
  EXPECT_EQ(mem.report.bits_down, 3 * 100 * 32);
  const auto van = VanillaStep(
      state, *p, Config(CompressorSpec::OneBit(), CompressorSpec::OneBit(), 0.1));
  EXPECT_EQ(van.report.bits_up, 3 * 100 * 32);
  EXPECT_EQ(van.report.bits_down, 3 * 100 * 32);
}

TEST(MemSgdStepTest, HandTraceAndNoServerResidual) {
  const auto p = ConstantGrads({{1.0, 2.0}});
  const auto r = MemSgdStep(
      ClusterState::Initial({0.0, 0.0}, 1), p,
      Config(CompressorSpec::TopK(1), CompressorSpec::TopK(1), 1.0));
  EXPECT_EQ(r.state.x, DenseVector({0.0, -2.0}));
  EXPECT_EQ(r.state.worker_residuals[0].delta(), DenseVector({1.0, 0.0}));
  EXPECT_EQ(r.state.server_residual.delta(), DenseVector({0.0, 0.0}));
}

TEST(EquivalenceTest, IdentityCompressionMatchesVanilla) {
  const auto p = NoisyQuadratic(15, 4, 3);
  const auto cfg =
      Config(CompressorSpec::Identity(), CompressorSpec::Identity(), 0.05);
  auto a = ClusterState::Initial(p->InitialPoint(), 4);
  auto b = a;
  auto c = a;
  for (int t = 0; t < 100; ++t) {
    a = DoubleSqueezeStep(a, *p, cfg).state;
    b = MemSgdStep(b, *p, cfg).state;
    c = VanillaStep(c, *p, cfg).state;
    ASSERT_EQ(a.x, c.x);
    ASSERT_EQ(b.x, c.x);
  }
}

TEST(QsgdStepTest, EqualMagnitudesAndZero) {
  const auto p = ConstantGrads({{3.0, -3.0, 3.0}});
  auto cfg = Config(CompressorSpec::Ternary(TernaryScale::kMaxAbs),
                    CompressorSpec::Identity(), 0.5);
  const auto r = QsgdStep(ClusterState::Initial({0, 0, 0}, 1), p, cfg);
  const auto v = VanillaStep(ClusterState::Initial({0, 0, 0}, 1), p, cfg);
  EXPECT_EQ(r.state.x, v.state.x);
  // norm_ratio: s = ||g|| / ||code|| = 3 as well here.
  cfg.worker_compressor = CompressorSpec::Ternary(TernaryScale::kNormRatio);
  EXPECT_LE(MaxAbsDiff(
                QsgdStep(ClusterState::Initial({0, 0, 0}, 1), p, cfg).state.x,
                v.state.x),
            1e-15);
  const auto zero = ConstantGrads({{0.0, 0.0}});
  EXPECT_EQ(QsgdStep(ClusterState::Initial({1, 2}, 1), zero, cfg)
                .report.applied_update,
            DenseVector({0.0, 0.0}));
}

TEST(QsgdStepTest, MaxAbsUnbiasedOverSteps) {
  const auto p = ConstantGrads({{0.2, -1.0, 0.7}});
  const int draws = 100000;
  std::vector<double> sum(3, 0.0);
  std::vector<double> sq(3, 0.0);
  const auto state = ClusterState::Initial({0, 0, 0}, 1);
  for (int i = 0; i < draws; ++i) {
    auto cfg = Config(CompressorSpec::Ternary(TernaryScale::kMaxAbs),
                      CompressorSpec::Identity(), 0.1);
    cfg.seed = static_cast<uint64_t>(i);
    const auto u = QsgdStep(state, p, cfg).report.applied_update;
    for (int j = 0; j < 3; ++j) {
      sum[j] += u[j];
      sq[j] += u[j] * u[j];
    }
  }
  const double g[3] = {0.2, -1.0, 0.7};
  for (int j = 0; j < 3; ++j) {
    const double mean = sum[j] / draws;
    const double se = std::sqrt(std::max(0.0, sq[j] / draws - mean * mean) / draws);
    EXPECT_LE(std::abs(mean + 0.1 * g[j]), 4 * se + 1e-12) << j;
  }
}

TEST(TopKSgdStepTest, Behaviour) {
  const auto p = ConstantGrads({{1.0, 2.0}});
  const auto cfg = Config(CompressorSpec::TopK(1), CompressorSpec::Identity(), 1.0);
  auto state = ClusterState::Initial({0.0, 0.0}, 1);
  for (int t = 0; t < 5; ++t) {
    state = TopKSgdStep(state, p, cfg).state;
    EXPECT_EQ(state.x[0], 0.0);
    EXPECT_EQ(state.worker_residuals[0].delta(), DenseVector({0.0, 0.0}));
  }
  EXPECT_EQ(state.x[1], -10.0);

  const auto wide = Config(CompressorSpec::TopK(5), CompressorSpec::Identity(), 1.0);
  EXPECT_EQ(TopKSgdStep(ClusterState::Initial({0.0, 0.0}, 1), p, wide).state.x,
            VanillaStep(ClusterState::Initial({0.0, 0.0}, 1), p, wide).state.x);
  const auto zero = ConstantGrads({{0.0, 0.0}});
  EXPECT_EQ(TopKSgdStep(ClusterState::Initial({3.0, 1.0}, 1), zero, cfg)
                .report.applied_update,
            DenseVector({0.0, 0.0}));
}

TEST(VanillaStepTest, Examples) {
  const QuadraticProblem p({1.0, 1.0}, {0.0, 0.0}, {{0.0, 0.0}}, 0.0);
  auto cfg = Config(CompressorSpec::Identity(), CompressorSpec::Identity(), 0.1);
  const auto r = VanillaStep(ClusterState::Initial({1.0, 1.0}, 1), p, cfg);
  EXPECT_DOUBLE_EQ(r.state.x[0], 0.9);
  EXPECT_DOUBLE_EQ(r.state.x[1], 0.9);
  cfg.gamma = 0.0;
  EXPECT_EQ(VanillaStep(ClusterState::Initial({1.0, 1.0}, 1), p, cfg).state.x,
            DenseVector({1.0, 1.0}));
  cfg.gamma = 1.0;
  const auto two = ConstantGrads({{2.0}, {4.0}});
  EXPECT_EQ(VanillaStep(ClusterState::Initial({0.0}, 2), two, cfg)
                .report.applied_update,
            DenseVector({-3.0}));
}

TEST(RunStepTest, DispatchAndValidation) {
  const auto p = ConstantGrads({{1.0, 2.0}});
  const auto state = ClusterState::Initial({0.0, 0.0}, 1);
  const auto cfg = Config(CompressorSpec::TopK(1), CompressorSpec::TopK(1), 1.0);
  EXPECT_EQ(RunStep(Algorithm::kTopKSgd, state, p, cfg).state.x,
            TopKSgdStep(state, p, cfg).state.x);
  EXPECT_EQ(RunStep(Algorithm::kDoubleSqueeze, state, p, cfg).state.x,
            DoubleSqueezeStep(state, p, cfg).state.x);
  EXPECT_THROW(ValidateAlgorithmCompressors(Algorithm::kQsgd,
                                            CompressorSpec::TopK(1),
                                            CompressorSpec::Identity()),
               Error);
  EXPECT_THROW(ValidateAlgorithmCompressors(Algorithm::kTopKSgd,
                                            CompressorSpec::OneBit(),
                                            CompressorSpec::Identity()),
               Error);
  EXPECT_NO_THROW(ValidateAlgorithmCompressors(
      Algorithm::kDoubleSqueeze, CompressorSpec::OneBit(),
      CompressorSpec::RandomQuantize(4)));
}

TEST(ParallelTest, MatchesSequentialBitForBit) {
  const auto p = NoisyQuadratic(30, 8, 11);
  auto seq = Config(CompressorSpec::RandomSparsify(0.3),
                    CompressorSpec::Ternary(TernaryScale::kMaxAbs), 0.05);
  auto par = seq;
  par.parallel_workers = true;
  auto a = ClusterState::Initial(p->InitialPoint(), 8);
  auto b = a;
  for (int t = 0; t < 30; ++t) {
    const auto ra = DoubleSqueezeStep(a, *p, seq);
    const auto rb = DoubleSqueezeStep(b, *p, par);
    ASSERT_EQ(ra.state.x, rb.state.x);
    ASSERT_EQ(ra.state.worker_residuals, rb.state.worker_residuals);
    ASSERT_EQ(ra.report.bits_up, rb.report.bits_up);
    a = ra.state;
    b = rb.state;
  }
}

TEST(ClosedFormTest, StepMatchesOracleForEveryKind) {
  const auto p = NoisyQuadratic(12, 3, 2);
  for (const CompressorSpec& spec :
       {CompressorSpec::OneBit(), CompressorSpec::TopK(2),
        CompressorSpec::Ternary(TernaryScale::kNormRatio),
        CompressorSpec::RandomQuantize(3), CompressorSpec::RandomSparsify(0.5),
        CompressorSpec::Clip(40)}) {
    auto state = ClusterState::Initial(p->InitialPoint(), 3);
    const auto cfg = Config(spec, spec, 0.07);
    for (int t = 0; t < 20; ++t) {
      const DenseVector omega_prev =
          ComputeOmega(state.worker_residuals, state.server_residual);
      const auto r = DoubleSqueezeStep(state, *p, cfg);
      const DenseVector omega_now =
          ComputeOmega(r.state.worker_residuals, r.state.server_residual);
      const DenseVector oracle = ClosedFormUpdate(
          r.report.per_worker_grads, omega_prev, omega_now, cfg.gamma);
      EXPECT_LE(L2Norm(Subtract(oracle, r.report.applied_update)), 1e-10)
          << spec.ToString();
      state = r.state;
    }
  }
}

}  // namespace
}  // namespace dsqueeze
