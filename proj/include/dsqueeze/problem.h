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

#ifndef DSQUEEZE_PROBLEM_H_
#define DSQUEEZE_PROBLEM_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dsqueeze/dense_vector.h"
#include "dsqueeze/rng.h"

namespace dsqueeze {

enum class ProblemKind { kQuadratic, kLogistic, kMlp };

std::string_view ProblemKindName(ProblemKind kind);
std::optional<ProblemKind> ParseProblemKind(std::string_view name);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::kQuadratic;
  // Quadratic: model dimension. Logistic: feature count (= model dim).
  // MLP: input width; the model dim follows from `hidden`.
  std::size_t dim = 10;
  // Additive Gaussian gradient noise with E||noise||^2 = noise_sigma^2.
  double noise_sigma = 0.0;
  // 0: every worker sees the same distribution; 1: strongly shifted shards.
  double heterogeneity = 0.0;

  // Quadratic. Empty `curvature` means log-spaced in
  // [curvature_min, curvature_max]; empty `optimum` means N(0, 1) draws,
  // or zeros when random_optimum is false.
  std::vector<double> curvature;
  double curvature_min = 1.0;
  double curvature_max = 1.0;
  std::vector<double> optimum;
  bool random_optimum = true;

  // Logistic / MLP synthetic data.
  std::size_t samples_per_worker = 256;
  std::size_t batch_size = 16;
  double class_separation = 2.0;
  double l2 = 1e-3;
  std::size_t hidden = 16;

  // Starting point; empty means zeros (quadratic, logistic) or a small
  // random draw (MLP, whose zero point is a saddle).
  std::vector<double> initial_point;

  void Validate() const;
  bool operator==(const ProblemSpec&) const = default;
};

// Realizes the local sample zeta of worker `worker` at `iteration`; all
// randomness comes from RngStream(seed, {worker, iteration, kData}).
struct SampleDraw {
  uint64_t seed = 0;
  uint32_t worker = 0;
  uint32_t iteration = 0;
};

// Per-worker local data. Quadratic shards use `offset` (the local gradient
// shift b_i, zero-mean across workers); data problems use `features`
// (rows x cols, row-major) and `targets`.
struct Shard {
  uint32_t worker = 0;
  std::vector<double> offset;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> features;
  std::vector<double> targets;
};

class Problem {
 public:
  virtual ~Problem() = default;

  virtual ProblemKind kind() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t num_workers() const = 0;
  virtual double noise_sigma() const { return 0.0; }

  // Exact gradient and value of the local objective f_i.
  virtual DenseVector LocalGrad(std::size_t worker,
                                const DenseVector& x) const = 0;
  virtual double LocalLoss(std::size_t worker, const DenseVector& x) const = 0;

  // Unbiased estimate of LocalGrad(draw.worker, x).
  virtual DenseVector StochasticGrad(const DenseVector& x,
                                     const SampleDraw& draw) const = 0;

  // f = (1/n) sum_i f_i, accumulated in ascending worker order.
  DenseVector FullGrad(const DenseVector& x) const;
  double Loss(const DenseVector& x) const;

  virtual DenseVector InitialPoint() const = 0;
  // Gradient Lipschitz constant when known in closed form (or as an upper
  // bound); empty otherwise.
  virtual std::optional<double> Smoothness() const { return std::nullopt; }

 protected:
  void CheckDim(const DenseVector& x) const;
  void CheckWorker(std::size_t worker) const;
};

// f_i(x) = 1/2 sum_j a_j (x_j - x*_j)^2 + b_i . (x - x*), sum_i b_i = 0.
class QuadraticProblem : public Problem {
 public:
  QuadraticProblem(std::vector<double> curvature, std::vector<double> optimum,
                   std::vector<std::vector<double>> offsets,
                   double noise_sigma, std::vector<double> initial_point = {});

  ProblemKind kind() const override { return ProblemKind::kQuadratic; }
  std::size_t dim() const override { return curvature_.size(); }
  std::size_t num_workers() const override { return offsets_.size(); }
  double noise_sigma() const override { return noise_sigma_; }

  DenseVector LocalGrad(std::size_t worker,
                        const DenseVector& x) const override;
  double LocalLoss(std::size_t worker, const DenseVector& x) const override;
  DenseVector StochasticGrad(const DenseVector& x,
                             const SampleDraw& draw) const override;
  DenseVector InitialPoint() const override;
  std::optional<double> Smoothness() const override;

  const std::vector<double>& curvature() const { return curvature_; }
  const std::vector<double>& optimum() const { return optimum_; }
  // f* = 0, attained at the optimum.
  double OptimalValue() const { return 0.0; }

 private:
  std::vector<double> curvature_;
  std::vector<double> optimum_;
  std::vector<std::vector<double>> offsets_;
  double noise_sigma_;
  std::vector<double> initial_point_;
};

// Binary logistic regression with labels in {-1, +1} and L2 penalty.
class LogisticProblem : public Problem {
 public:
  LogisticProblem(std::vector<Shard> shards, std::size_t batch_size,
                  double l2, double noise_sigma,
                  std::vector<double> initial_point = {});

  ProblemKind kind() const override { return ProblemKind::kLogistic; }
  std::size_t dim() const override { return cols_; }
  std::size_t num_workers() const override { return shards_.size(); }
  double noise_sigma() const override { return noise_sigma_; }

  DenseVector LocalGrad(std::size_t worker,
                        const DenseVector& x) const override;
  double LocalLoss(std::size_t worker, const DenseVector& x) const override;
  DenseVector StochasticGrad(const DenseVector& x,
                             const SampleDraw& draw) const override;
  DenseVector InitialPoint() const override;
  // 0.25 * max_i mean ||a||^2 + l2, an upper bound on the Hessian norm.
  std::optional<double> Smoothness() const override;

  const std::vector<Shard>& shards() const { return shards_; }

 private:
  void AccumulateSample(const Shard& shard, std::size_t row,
                        const DenseVector& w, double weight,
                        std::vector<double>& grad) const;

  std::vector<Shard> shards_;
  std::size_t cols_;
  std::size_t batch_size_;
  double l2_;
  double noise_sigma_;
  std::vector<double> initial_point_;
};

// One hidden tanh layer, scalar output, squared loss. Parameters are laid
// out as [W1 (hidden x inputs, row-major), b1, w2, b2].
class MlpProblem : public Problem {
 public:
  MlpProblem(std::vector<Shard> shards, std::size_t hidden,
             std::size_t batch_size, double l2, double noise_sigma,
             std::vector<double> initial_point);

  static std::size_t ParamCount(std::size_t inputs, std::size_t hidden) {
    return hidden * inputs + 2 * hidden + 1;
  }

  ProblemKind kind() const override { return ProblemKind::kMlp; }
  std::size_t dim() const override { return ParamCount(inputs_, hidden_); }
  std::size_t num_workers() const override { return shards_.size(); }
  double noise_sigma() const override { return noise_sigma_; }

  DenseVector LocalGrad(std::size_t worker,
                        const DenseVector& x) const override;
  double LocalLoss(std::size_t worker, const DenseVector& x) const override;
  DenseVector StochasticGrad(const DenseVector& x,
                             const SampleDraw& draw) const override;
  DenseVector InitialPoint() const override;

  double Predict(const DenseVector& params, std::span<const double> input) const;
  static double Forward(std::span<const double> params, std::size_t inputs,
                        std::size_t hidden, std::span<const double> input);

 private:
  // Adds weight * d(loss of one sample)/d(params) to grad; returns the loss.
  double AccumulateSample(const DenseVector& params,
                          std::span<const double> input, double target,
                          double weight, std::vector<double>* grad) const;

  std::vector<Shard> shards_;
  std::size_t inputs_;
  std::size_t hidden_;
  std::size_t batch_size_;
  double l2_;
  double noise_sigma_;
  std::vector<double> initial_point_;
};

// Builds n per-worker shards; deterministic in (spec, n, heterogeneity,
// seed). Heterogeneity 0 gives identically distributed shards.
std::vector<Shard> MakeShards(const ProblemSpec& spec, std::size_t n,
                              double heterogeneity, uint64_t seed);

// Constructs the problem described by spec, split over n workers.
std::unique_ptr<Problem> MakeProblem(const ProblemSpec& spec, std::size_t n,
                                     uint64_t seed);

}  // namespace dsqueeze

#endif  // DSQUEEZE_PROBLEM_H_
