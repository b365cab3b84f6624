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

#include "dsqueeze/problem.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "dsqueeze/error.h"

namespace dsqueeze {
namespace {

constexpr double kMlpTargetNoise = 0.1;
constexpr double kMlpInitScale = 0.5;
// Per-coordinate scale of the worker mean shift at heterogeneity 1.
constexpr double kShiftScale = 2.0;

void Invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

// Adds N(0, sigma^2 / d) noise per coordinate so E||noise||^2 = sigma^2.
void AddGradientNoise(double sigma, RngCursor& cursor,
                      std::vector<double>& grad) {
  if (sigma <= 0.0) return;
  const double per_coord = sigma / std::sqrt(static_cast<double>(grad.size()));
  for (double& g : grad) g += per_coord * cursor.NextNormal();
}

RngCursor DataCursor(const SampleDraw& draw) {
  return RngCursor(RngStream(draw.seed, {draw.worker, draw.iteration,
                                         Purpose::kData}));
}

// Zero-mean (across workers) per-worker shift vectors, scaled by
// heterogeneity. A single worker always gets the zero shift.
std::vector<std::vector<double>> WorkerShifts(std::size_t n, std::size_t dim,
                                              double heterogeneity,
                                              double scale, uint64_t seed) {
  std::vector<std::vector<double>> shifts(n, std::vector<double>(dim, 0.0));
  if (heterogeneity == 0.0 || n == 1) return shifts;
  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    shifts[i] = DrawNormal(
        RngStream(seed, {static_cast<uint32_t>(i), 1, Purpose::kDataset}), dim);
    for (std::size_t j = 0; j < dim; ++j) mean[j] += shifts[i][j];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (auto& s : shifts) {
    for (std::size_t j = 0; j < dim; ++j) {
      s[j] = heterogeneity * scale * (s[j] - mean[j]);
    }
  }
  return shifts;
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(-m)) without overflow.
double LogisticLoss(double margin) {
  return std::log1p(std::exp(-std::abs(margin))) + std::max(-margin, 0.0);
}

}  // namespace

std::string_view ProblemKindName(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kQuadratic:
      return "quadratic";
    case ProblemKind::kLogistic:
      return "logistic";
    case ProblemKind::kMlp:
      return "mlp";
  }
  return "unknown";
}

std::optional<ProblemKind> ParseProblemKind(std::string_view name) {
  for (ProblemKind k : {ProblemKind::kQuadratic, ProblemKind::kLogistic,
                        ProblemKind::kMlp}) {
    if (ProblemKindName(k) == name) return k;
  }
  return std::nullopt;
}

void ProblemSpec::Validate() const {
  if (dim < 1) Invalid("problem dim must be >= 1");
  if (!(noise_sigma >= 0.0)) Invalid("noise_sigma must be >= 0");
  if (!(heterogeneity >= 0.0 && heterogeneity <= 1.0)) {
    Invalid("heterogeneity must lie in [0, 1]");
  }
  if (kind == ProblemKind::kQuadratic) {
    if (!curvature.empty() && curvature.size() != dim) {
      Invalid("curvature length must equal dim");
    }
    for (double a : curvature) {
      if (!(a > 0.0)) Invalid("curvature entries must be > 0");
    }
    if (curvature.empty() &&
        !(curvature_min > 0.0 && curvature_max >= curvature_min)) {
      Invalid("need 0 < curvature_min <= curvature_max");
    }
    if (!optimum.empty() && optimum.size() != dim) {
      Invalid("optimum length must equal dim");
    }
  } else {
    if (samples_per_worker < 1) Invalid("samples_per_worker must be >= 1");
    if (batch_size < 1) Invalid("batch_size must be >= 1");
    if (!(l2 >= 0.0)) Invalid("l2 must be >= 0");
    if (kind == ProblemKind::kMlp && hidden < 1) Invalid("hidden must be >= 1");
  }
  const std::size_t model_dim =
      kind == ProblemKind::kMlp ? MlpProblem::ParamCount(dim, hidden) : dim;
  if (!initial_point.empty() && initial_point.size() != model_dim) {
    Invalid("initial_point length must equal the model dimension " +
            std::to_string(model_dim));
  }
}

// ---------------------------------------------------------------------------
// Problem

void Problem::CheckDim(const DenseVector& x) const {
  if (x.dim() != dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model has dim " + std::to_string(x.dim()) +
                    ", problem expects " + std::to_string(dim()));
  }
}

void Problem::CheckWorker(std::size_t worker) const {
  if (worker >= num_workers()) {
    Invalid("worker index " + std::to_string(worker) + " out of range");
  }
}

DenseVector Problem::FullGrad(const DenseVector& x) const {
  std::vector<DenseVector> grads;
  grads.reserve(num_workers());
  for (std::size_t i = 0; i < num_workers(); ++i) {
    grads.push_back(LocalGrad(i, x));
  }
  return Mean(grads);
}

double Problem::Loss(const DenseVector& x) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < num_workers(); ++i) sum += LocalLoss(i, x);
  return sum / static_cast<double>(num_workers());
}

// ---------------------------------------------------------------------------
// Quadratic

QuadraticProblem::QuadraticProblem(std::vector<double> curvature,
                                   std::vector<double> optimum,
                                   std::vector<std::vector<double>> offsets,
                                   double noise_sigma,
                                   std::vector<double> initial_point)
    : curvature_(std::move(curvature)),
      optimum_(std::move(optimum)),
      offsets_(std::move(offsets)),
      noise_sigma_(noise_sigma),
      initial_point_(std::move(initial_point)) {
  if (curvature_.empty()) Invalid("quadratic needs dim >= 1");
  if (optimum_.size() != curvature_.size()) Invalid("optimum length mismatch");
  if (offsets_.empty()) Invalid("quadratic needs at least one worker");
  for (const auto& b : offsets_) {
    if (b.size() != curvature_.size()) Invalid("offset length mismatch");
  }
  if (!initial_point_.empty() && initial_point_.size() != curvature_.size()) {
    Invalid("initial point length mismatch");
  }
}

DenseVector QuadraticProblem::LocalGrad(std::size_t worker,
                                        const DenseVector& x) const {
  CheckDim(x);
  CheckWorker(worker);
  const auto& b = offsets_[worker];
  std::vector<double> g(dim());
  for (std::size_t j = 0; j < g.size(); ++j) {
    g[j] = curvature_[j] * (x[j] - optimum_[j]) + b[j];
  }
  return DenseVector(std::move(g));
}

double QuadraticProblem::LocalLoss(std::size_t worker,
                                   const DenseVector& x) const {
  CheckDim(x);
  CheckWorker(worker);
  const auto& b = offsets_[worker];
  double sum = 0.0;
  for (std::size_t j = 0; j < dim(); ++j) {
    const double e = x[j] - optimum_[j];
    sum += 0.5 * curvature_[j] * e * e + b[j] * e;
  }
  return sum;
}

DenseVector QuadraticProblem::StochasticGrad(const DenseVector& x,
                                             const SampleDraw& draw) const {
  std::vector<double> g = LocalGrad(draw.worker, x).ToStdVector();
  RngCursor cursor = DataCursor(draw);
  AddGradientNoise(noise_sigma_, cursor, g);
  return DenseVector(std::move(g));
}

DenseVector QuadraticProblem::InitialPoint() const {
  if (initial_point_.empty()) return DenseVector::Zeros(dim());
  return DenseVector(initial_point_);
}

std::optional<double> QuadraticProblem::Smoothness() const {
  return *std::max_element(curvature_.begin(), curvature_.end());
}

// ---------------------------------------------------------------------------
// Logistic

LogisticProblem::LogisticProblem(std::vector<Shard> shards,
                                 std::size_t batch_size, double l2,
                                 double noise_sigma,
                                 std::vector<double> initial_point)
    : shards_(std::move(shards)),
      cols_(0),
      batch_size_(batch_size),
      l2_(l2),
      noise_sigma_(noise_sigma),
      initial_point_(std::move(initial_point)) {
  if (shards_.empty()) Invalid("logistic needs at least one shard");
  cols_ = shards_.front().cols;
  if (cols_ < 1) Invalid("logistic needs at least one feature");
  for (const Shard& s : shards_) {
    if (s.cols != cols_ || s.rows < 1 || s.features.size() != s.rows * s.cols ||
        s.targets.size() != s.rows) {
      Invalid("inconsistent logistic shard");
    }
    for (double y : s.targets) {
      if (y != 1.0 && y != -1.0) Invalid("logistic labels must be +1 or -1");
    }
  }
  if (batch_size_ < 1) Invalid("batch_size must be >= 1");
  if (!initial_point_.empty() && initial_point_.size() != cols_) {
    Invalid("initial point length mismatch");
  }
}

void LogisticProblem::AccumulateSample(const Shard& shard, std::size_t row,
                                       const DenseVector& w, double weight,
                                       std::vector<double>& grad) const {
  const double* a = shard.features.data() + row * cols_;
  const double y = shard.targets[row];
  double z = 0.0;
  for (std::size_t j = 0; j < cols_; ++j) z += a[j] * w[j];
  // d/dz log(1 + exp(-y z)) = -y * sigmoid(-y z)
  const double coeff = -y * Sigmoid(-y * z) * weight;
  for (std::size_t j = 0; j < cols_; ++j) grad[j] += coeff * a[j];
}

DenseVector LogisticProblem::LocalGrad(std::size_t worker,
                                       const DenseVector& x) const {
  CheckDim(x);
  CheckWorker(worker);
  const Shard& shard = shards_[worker];
  std::vector<double> g(cols_, 0.0);
  const double weight = 1.0 / static_cast<double>(shard.rows);
  for (std::size_t r = 0; r < shard.rows; ++r) {
    AccumulateSample(shard, r, x, weight, g);
  }
  for (std::size_t j = 0; j < cols_; ++j) g[j] += l2_ * x[j];
  return DenseVector(std::move(g));
}

double LogisticProblem::LocalLoss(std::size_t worker,
                                  const DenseVector& x) const {
  CheckDim(x);
  CheckWorker(worker);
  const Shard& shard = shards_[worker];
  double sum = 0.0;
  for (std::size_t r = 0; r < shard.rows; ++r) {
    const double* a = shard.features.data() + r * cols_;
    double z = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) z += a[j] * x[j];
    sum += LogisticLoss(shard.targets[r] * z);
  }
  return sum / static_cast<double>(shard.rows) + 0.5 * l2_ * SquaredNorm(x);
}

DenseVector LogisticProblem::StochasticGrad(const DenseVector& x,
                                            const SampleDraw& draw) const {
  CheckDim(x);
  CheckWorker(draw.worker);
  const Shard& shard = shards_[draw.worker];
  RngCursor cursor = DataCursor(draw);
  std::vector<double> g(cols_, 0.0);
  const double weight = 1.0 / static_cast<double>(batch_size_);
  for (std::size_t b = 0; b < batch_size_; ++b) {
    AccumulateSample(shard, cursor.NextIndex(shard.rows), x, weight, g);
  }
  for (std::size_t j = 0; j < cols_; ++j) g[j] += l2_ * x[j];
  AddGradientNoise(noise_sigma_, cursor, g);
  return DenseVector(std::move(g));
}

DenseVector LogisticProblem::InitialPoint() const {
  if (initial_point_.empty()) return DenseVector::Zeros(cols_);
  return DenseVector(initial_point_);
}

std::optional<double> LogisticProblem::Smoothness() const {
  double worst = 0.0;
  for (const Shard& s : shards_) {
    double sum = 0.0;
    for (double a : s.features) sum += a * a;
    worst = std::max(worst, sum / static_cast<double>(s.rows));
  }
  return 0.25 * worst + l2_;
}

// ---------------------------------------------------------------------------
// MLP

MlpProblem::MlpProblem(std::vector<Shard> shards, std::size_t hidden,
                       std::size_t batch_size, double l2, double noise_sigma,
                       std::vector<double> initial_point)
    : shards_(std::move(shards)),
      inputs_(0),
      hidden_(hidden),
      batch_size_(batch_size),
      l2_(l2),
      noise_sigma_(noise_sigma),
      initial_point_(std::move(initial_point)) {
  if (shards_.empty()) Invalid("mlp needs at least one shard");
  inputs_ = shards_.front().cols;
  if (inputs_ < 1 || hidden_ < 1) Invalid("mlp needs inputs and hidden >= 1");
  for (const Shard& s : shards_) {
    if (s.cols != inputs_ || s.rows < 1 ||
        s.features.size() != s.rows * s.cols || s.targets.size() != s.rows) {
      Invalid("inconsistent mlp shard");
    }
  }
  if (batch_size_ < 1) Invalid("batch_size must be >= 1");
  if (initial_point_.size() != dim()) Invalid("mlp initial point length");
}

double MlpProblem::AccumulateSample(const DenseVector& params,
                                    std::span<const double> input,
                                    double target, double weight,
                                    std::vector<double>* grad) const {
  const std::size_t w1 = 0;
  const std::size_t b1 = hidden_ * inputs_;
  const std::size_t w2 = b1 + hidden_;
  const std::size_t b2 = w2 + hidden_;
  std::vector<double> act(hidden_);
  double out = params[b2];
  for (std::size_t h = 0; h < hidden_; ++h) {
    double pre = params[b1 + h];
    for (std::size_t j = 0; j < inputs_; ++j) {
      pre += params[w1 + h * inputs_ + j] * input[j];
    }
    act[h] = std::tanh(pre);
    out += params[w2 + h] * act[h];
  }
  const double residual = out - target;
  if (grad != nullptr) {
    std::vector<double>& g = *grad;
    const double r = weight * residual;
    g[b2] += r;
    for (std::size_t h = 0; h < hidden_; ++h) {
      g[w2 + h] += r * act[h];
      const double back = r * params[w2 + h] * (1.0 - act[h] * act[h]);
      g[b1 + h] += back;
      for (std::size_t j = 0; j < inputs_; ++j) {
        g[w1 + h * inputs_ + j] += back * input[j];
      }
    }
  }
  return 0.5 * residual * residual;
}

double MlpProblem::Forward(std::span<const double> params, std::size_t inputs,
                          std::size_t hidden, std::span<const double> input) {
  const std::size_t b1 = hidden * inputs;
  const std::size_t w2 = b1 + hidden;
  double out = params[w2 + hidden];
  for (std::size_t h = 0; h < hidden; ++h) {
    double pre = params[b1 + h];
    for (std::size_t j = 0; j < inputs; ++j) {
      pre += params[h * inputs + j] * input[j];
    }
    out += params[w2 + h] * std::tanh(pre);
  }
  return out;
}

double MlpProblem::Predict(const DenseVector& params,
                           std::span<const double> input) const {
  CheckDim(params);
  return Forward(params.values(), inputs_, hidden_, input);
}

DenseVector MlpProblem::LocalGrad(std::size_t worker,
                                  const DenseVector& x) const {
  CheckDim(x);
  CheckWorker(worker);
  const Shard& shard = shards_[worker];
  std::vector<double> g(dim(), 0.0);
  const double weight = 1.0 / static_cast<double>(shard.rows);
  for (std::size_t r = 0; r < shard.rows; ++r) {
    AccumulateSample(
        x, std::span<const double>(shard.features).subspan(r * inputs_, inputs_),
        shard.targets[r], weight, &g);
  }
  for (std::size_t j = 0; j < g.size(); ++j) g[j] += l2_ * x[j];
  return DenseVector(std::move(g));
}

double MlpProblem::LocalLoss(std::size_t worker, const DenseVector& x) const {
  CheckDim(x);
  CheckWorker(worker);
  const Shard& shard = shards_[worker];
  double sum = 0.0;
  for (std::size_t r = 0; r < shard.rows; ++r) {
    sum += AccumulateSample(
        x, std::span<const double>(shard.features).subspan(r * inputs_, inputs_),
        shard.targets[r], 1.0, nullptr);
  }
  return sum / static_cast<double>(shard.rows) + 0.5 * l2_ * SquaredNorm(x);
}

DenseVector MlpProblem::StochasticGrad(const DenseVector& x,
                                       const SampleDraw& draw) const {
  CheckDim(x);
  CheckWorker(draw.worker);
  const Shard& shard = shards_[draw.worker];
  RngCursor cursor = DataCursor(draw);
  std::vector<double> g(dim(), 0.0);
  const double weight = 1.0 / static_cast<double>(batch_size_);
  for (std::size_t b = 0; b < batch_size_; ++b) {
    const std::size_t r = cursor.NextIndex(shard.rows);
    AccumulateSample(
        x, std::span<const double>(shard.features).subspan(r * inputs_, inputs_),
        shard.targets[r], weight, &g);
  }
  for (std::size_t j = 0; j < g.size(); ++j) g[j] += l2_ * x[j];
  AddGradientNoise(noise_sigma_, cursor, g);
  return DenseVector(std::move(g));
}

DenseVector MlpProblem::InitialPoint() const {
  return DenseVector(initial_point_);
}

// ---------------------------------------------------------------------------
// Construction

std::vector<Shard> MakeShards(const ProblemSpec& spec, std::size_t n,
                              double heterogeneity, uint64_t seed) {
  if (n < 1) Invalid("need at least one worker");
  ProblemSpec checked = spec;
  checked.heterogeneity = heterogeneity;
  checked.Validate();

  const std::size_t cols = spec.dim;
  std::vector<Shard> shards(n);
  if (spec.kind == ProblemKind::kQuadratic) {
    auto offsets = WorkerShifts(n, cols, heterogeneity, 1.0, seed);
    for (std::size_t i = 0; i < n; ++i) {
      shards[i].worker = static_cast<uint32_t>(i);
      shards[i].offset = std::move(offsets[i]);
    }
    return shards;
  }

  const auto shifts = WorkerShifts(n, cols, heterogeneity, kShiftScale, seed);
  const RngStream global(seed, {kServerNode, 0, Purpose::kDataset});

  // Logistic: class mean with ||mu|| = separation / 2.
  std::vector<double> class_mean = DrawNormal(global, cols);
  {
    double norm = 0.0;
    for (double m : class_mean) norm += m * m;
    norm = std::sqrt(norm);
    for (double& m : class_mean) m *= 0.5 * spec.class_separation / norm;
  }
  // MLP teacher: same layout as the student parameters.
  std::vector<double> teacher;
  if (spec.kind == ProblemKind::kMlp) {
    const std::size_t h = spec.hidden;
    teacher = DrawNormal(RngStream(seed, {kServerNode, 1, Purpose::kDataset}),
                         MlpProblem::ParamCount(cols, h));
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(cols));
    const double out_scale = 1.0 / std::sqrt(static_cast<double>(h));
    for (std::size_t j = 0; j < h * cols; ++j) teacher[j] *= in_scale;
    for (std::size_t j = h * cols + h; j < teacher.size(); ++j) {
      teacher[j] *= out_scale;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    Shard& s = shards[i];
    s.worker = static_cast<uint32_t>(i);
    s.rows = spec.samples_per_worker;
    s.cols = cols;
    s.features.resize(s.rows * cols);
    s.targets.resize(s.rows);
    RngCursor cursor(
        RngStream(seed, {static_cast<uint32_t>(i), 0, Purpose::kDataset}));
    for (std::size_t r = 0; r < s.rows; ++r) {
      double* row = s.features.data() + r * cols;
      if (spec.kind == ProblemKind::kLogistic) {
        const double y = cursor.NextUniform() < 0.5 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < cols; ++j) {
          row[j] = y * class_mean[j] + shifts[i][j] + cursor.NextNormal();
        }
        s.targets[r] = y;
      } else {
        for (std::size_t j = 0; j < cols; ++j) {
          row[j] = shifts[i][j] + cursor.NextNormal();
        }
        s.targets[r] = MlpProblem::Forward(teacher, cols, spec.hidden,
                                           std::span<const double>(row, cols)) +
                       kMlpTargetNoise * cursor.NextNormal();
      }
    }
  }
  return shards;
}

std::unique_ptr<Problem> MakeProblem(const ProblemSpec& spec, std::size_t n,
                                     uint64_t seed) {
  spec.Validate();
  auto shards = MakeShards(spec, n, spec.heterogeneity, seed);
  switch (spec.kind) {
    case ProblemKind::kQuadratic: {
      const std::size_t d = spec.dim;
      std::vector<double> curvature = spec.curvature;
      if (curvature.empty()) {
        curvature.resize(d);
        const double ratio = spec.curvature_max / spec.curvature_min;
        for (std::size_t j = 0; j < d; ++j) {
          const double t = d == 1 ? 0.0 : static_cast<double>(j) / (d - 1);
          curvature[j] = spec.curvature_min * std::pow(ratio, t);
        }
      }
      std::vector<double> optimum = spec.optimum;
      if (optimum.empty()) {
        optimum = spec.random_optimum
                      ? DrawNormal(RngStream(seed, {kServerNode, 0, Purpose::kInit}), d)
                      : std::vector<double>(d, 0.0);
      }
      std::vector<std::vector<double>> offsets;
      offsets.reserve(n);
      for (Shard& s : shards) offsets.push_back(std::move(s.offset));
      return std::make_unique<QuadraticProblem>(
          std::move(curvature), std::move(optimum), std::move(offsets),
          spec.noise_sigma, spec.initial_point);
    }
    case ProblemKind::kLogistic:
      return std::make_unique<LogisticProblem>(std::move(shards),
                                               spec.batch_size, spec.l2,
                                               spec.noise_sigma,
                                               spec.initial_point);
    case ProblemKind::kMlp: {
      std::vector<double> init = spec.initial_point;
      if (init.empty()) {
        init = DrawNormal(RngStream(seed, {kServerNode, 2, Purpose::kInit}),
                          MlpProblem::ParamCount(spec.dim, spec.hidden));
        for (double& v : init) v *= kMlpInitScale;
      }
      return std::make_unique<MlpProblem>(std::move(shards), spec.hidden,
                                          spec.batch_size, spec.l2,
                                          spec.noise_sigma, std::move(init));
    }
  }
  Invalid("unknown problem kind");
  return nullptr;
}

}  // namespace dsqueeze
