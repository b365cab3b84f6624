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

#include "dsqueeze/analysis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dsqueeze/error.h"

namespace dsqueeze {
namespace {

void CheckSteps(const Trajectory& trajectory) {
  const std::size_t n = trajectory.num_workers;
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    const TrajectoryStep& s = trajectory.steps[t];
    if (s.worker_delta_sq.size() != n || s.worker_grad_norm.size() != n) {
      throw Error(ErrorCode::kIncompleteTrajectory,
                  "step " + std::to_string(t) + " lacks per-worker records");
    }
  }
}

DenseVector OmegaBefore(const Trajectory& trajectory, std::size_t t) {
  if (t == 0) return DenseVector::Zeros(trajectory.steps[0].x.dim());
  return trajectory.steps[t - 1].omega;
}

}  // namespace

DenseVector ComputeOmega(std::span<const ResidualState> worker_residuals,
                         const ResidualState& server_residual) {
  if (worker_residuals.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "ComputeOmega: no workers");
  }
  std::vector<DenseVector> deltas;
  deltas.reserve(worker_residuals.size());
  for (const ResidualState& r : worker_residuals) {
    CheckSameDim(r.delta(), server_residual.delta(), "ComputeOmega");
    deltas.push_back(r.delta());
  }
  return Add(server_residual.delta(), Mean(deltas));
}

DenseVector ClosedFormUpdate(std::span<const DenseVector> grads,
                             const DenseVector& omega_prev,
                             const DenseVector& omega_now, double gamma) {
  if (grads.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "ClosedFormUpdate: no gradients");
  }
  const DenseVector mean = Mean(grads);
  CheckSameDim(mean, omega_prev, "ClosedFormUpdate");
  CheckSameDim(mean, omega_now, "ClosedFormUpdate");
  return Scale(-gamma, Subtract(Add(mean, omega_prev), omega_now));
}

DenseVector ComputeXi(const DenseVector& full_grad,
                      std::span<const DenseVector> grads) {
  if (grads.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "ComputeXi: no gradients");
  }
  const DenseVector mean = Mean(grads);
  CheckSameDim(full_grad, mean, "ComputeXi");
  return Subtract(full_grad, mean);
}

DenseVector AuxiliaryPoint(const DenseVector& x, const DenseVector& omega_prev,
                           double gamma) {
  return Axpy(-gamma, omega_prev, x);
}

double MaxClosedFormDeviation(const Trajectory& trajectory) {
  double worst = 0.0;
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    const TrajectoryStep& s = trajectory.steps[t];
    const DenseVector oracle =
        ClosedFormUpdate(std::span<const DenseVector>(&s.mean_grad, 1),
                         OmegaBefore(trajectory, t), s.omega, s.gamma);
    worst = std::max(worst, L2Norm(Subtract(s.applied_update, oracle)));
  }
  return worst;
}

double MaxAuxiliaryDeviation(const Trajectory& trajectory) {
  double worst = 0.0;
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    const TrajectoryStep& s = trajectory.steps[t];
    const DenseVector y_now =
        AuxiliaryPoint(s.x, OmegaBefore(trajectory, t), s.gamma);
    const DenseVector x_next = Add(s.x, s.applied_update);
    const DenseVector y_next = AuxiliaryPoint(x_next, s.omega, s.gamma);
    const DenseVector gap =
        Axpy(s.gamma, s.mean_grad, Subtract(y_next, y_now));
    worst = std::max(worst, L2Norm(gap));
  }
  return worst;
}

double TelescopingCheck(const Trajectory& trajectory) {
  if (trajectory.steps.empty()) return 0.0;
  if (!trajectory.final_x) {
    throw Error(ErrorCode::kIncompleteTrajectory, "final iterate missing");
  }
  const double gamma = trajectory.steps.front().gamma;
  std::vector<double> sum(trajectory.steps.front().x.dim(), 0.0);
  for (const TrajectoryStep& s : trajectory.steps) {
    if (s.gamma != gamma) {
      throw Error(ErrorCode::kInvalidArgument,
                  "telescoping check needs a constant step size");
    }
    CheckSameDim(s.mean_grad, trajectory.steps.front().x, "TelescopingCheck");
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += s.mean_grad[j];
  }
  const DenseVector grad_sum(std::move(sum));
  const DenseVector& omega_last = trajectory.steps.back().omega;
  const DenseVector lhs =
      Subtract(trajectory.steps.front().x, *trajectory.final_x);
  const DenseVector rhs = Scale(gamma, Subtract(grad_sum, omega_last));
  return L2Norm(Subtract(lhs, rhs)) / (1.0 + L2Norm(Scale(gamma, grad_sum)));
}

double LrCorollary(double L, double sigma, double epsilon, long long T,
                   long long n) {
  if (!(L > 0.0) || !std::isfinite(L)) {
    throw Error(ErrorCode::kInvalidArgument, "L must be positive");
  }
  if (T < 1) throw Error(ErrorCode::kInvalidArgument, "T must be >= 1");
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  if (!(sigma >= 0.0) || !(epsilon >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma, epsilon must be >= 0");
  }
  const double td = static_cast<double>(T);
  const double denom = 4.0 * L +
                       sigma * std::sqrt(td / static_cast<double>(n)) +
                       std::cbrt(epsilon * epsilon) * std::cbrt(td);
  return 1.0 / denom;
}

ResidualBoundReport EvaluateResidualBound(std::string site,
                                          std::span<const double> residual_sq,
                                          double g_hat, double noise_term,
                                          double alpha_sq,
                                          std::optional<double> rho) {
  ResidualBoundReport report;
  report.site = std::move(site);
  report.g_hat = g_hat;
  report.noise_term = noise_term;
  for (double r : residual_sq) {
    report.max_residual_sq = std::max(report.max_residual_sq, r);
  }
  const double numerator = g_hat * g_hat + noise_term;
  std::vector<double> candidates;
  if (rho) {
    if (!(*rho > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "rho must be positive");
    }
    candidates.push_back(*rho);
  } else {
    candidates.assign(std::begin(kRhoGrid), std::end(kRhoGrid));
  }
  report.bound = std::numeric_limits<double>::infinity();
  report.vacuous = true;
  for (double r : candidates) {
    const double denom = 1.0 - (1.0 + r) * alpha_sq;
    if (denom <= 0.0) continue;
    const double bound = numerator / denom;
    if (report.vacuous || bound < report.bound) {
      report.bound = bound;
      report.rho = r;
      report.vacuous = false;
    }
  }
  report.violated = !report.vacuous && report.max_residual_sq > report.bound;
  return report;
}

std::vector<ResidualBoundReport> ResidualBoundCheck(
    const Trajectory& trajectory, const BoundParams& params) {
  CheckSteps(trajectory);
  if (params.alpha_sq < 0.0 || params.sigma < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "bound parameters must be >= 0");
  }
  const std::size_t n = trajectory.num_workers;
  const double sigma_sq = params.sigma * params.sigma;
  std::vector<ResidualBoundReport> reports;

  std::vector<double> server_sq;
  double server_g = 0.0;
  for (const TrajectoryStep& s : trajectory.steps) {
    server_sq.push_back(s.server_delta_sq);
    server_g = std::max(server_g, L2Norm(s.mean_grad));
  }
  reports.push_back(EvaluateResidualBound(
      "server", server_sq, params.G.value_or(server_g),
      n > 0 ? sigma_sq / static_cast<double>(n) : sigma_sq, params.alpha_sq,
      params.rho));

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> worker_sq;
    double worker_g = 0.0;
    for (const TrajectoryStep& s : trajectory.steps) {
      worker_sq.push_back(s.worker_delta_sq[i]);
      worker_g = std::max(worker_g, s.worker_grad_norm[i]);
    }
    reports.push_back(EvaluateResidualBound(
        "worker " + std::to_string(i), worker_sq, params.G.value_or(worker_g),
        sigma_sq, params.alpha_sq, params.rho));
  }
  return reports;
}

TrendReport ResidualTrend(std::span<const double> values,
                          double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tail_fraction in (0, 1]");
  }
  TrendReport report;
  const auto window = static_cast<std::size_t>(
      std::ceil(tail_fraction * static_cast<double>(values.size())));
  report.window = window;
  if (window < 2) return report;
  const std::span<const double> tail = values.last(window);
  const double w = static_cast<double>(window);
  const double t_mean = (w - 1.0) / 2.0;
  double v_mean = 0.0;
  for (double v : tail) v_mean += v;
  v_mean /= w;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < window; ++k) {
    const double dt = static_cast<double>(k) - t_mean;
    sxy += dt * (tail[k] - v_mean);
    sxx += dt * dt;
  }
  report.slope = sxy / sxx;
  report.mean = v_mean;
  report.upward = report.slope > 0.0 &&
                  report.slope * w > 0.05 * std::abs(v_mean);
  return report;
}

double TheoremMetric(std::span<const double> grad_norm_sq) {
  if (grad_norm_sq.empty()) {
    throw Error(ErrorCode::kIncompleteTrajectory, "empty trajectory");
  }
  double sum = 0.0;
  for (double g : grad_norm_sq) sum += g;
  return sum / static_cast<double>(grad_norm_sq.size());
}

double TheoremMetric(const Trajectory& trajectory) {
  std::vector<double> values;
  values.reserve(trajectory.steps.size());
  for (const TrajectoryStep& s : trajectory.steps) {
    values.push_back(s.grad_norm_sq);
  }
  return TheoremMetric(values);
}

double TheoremRateBound(double L, double sigma, double epsilon, double gamma,
                        long long T, long long n, double f0_gap) {
  if (T < 1 || n < 1) {
    throw Error(ErrorCode::kInvalidArgument, "T and n must be >= 1");
  }
  const double coeff = gamma / 2.0 - L * gamma * gamma / 2.0;
  if (!(coeff > 0.0)) return std::numeric_limits<double>::infinity();
  const double td = static_cast<double>(T);
  const double numerator =
      f0_gap + L * gamma * gamma * sigma * sigma * td / (2.0 * n) +
      4.0 * L * L * epsilon * epsilon * gamma * gamma * gamma * td;
  return numerator / (coeff * td);
}

}  // namespace dsqueeze
