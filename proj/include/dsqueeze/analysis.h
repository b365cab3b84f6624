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

#ifndef DSQUEEZE_ANALYSIS_H_
#define DSQUEEZE_ANALYSIS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsqueeze/dense_vector.h"
#include "dsqueeze/error_feedback.h"

namespace dsqueeze {

// Omega_t = delta_t + (1/n) sum_i delta_t^(i).
DenseVector ComputeOmega(std::span<const ResidualState> worker_residuals,
                         const ResidualState& server_residual);

// -gamma * ((1/n) sum grads + omega_prev - omega_now).
DenseVector ClosedFormUpdate(std::span<const DenseVector> grads,
                             const DenseVector& omega_prev,
                             const DenseVector& omega_now, double gamma);

// xi_t = (1/n) sum_i (full_grad - grads[i]).
DenseVector ComputeXi(const DenseVector& full_grad,
                      std::span<const DenseVector> grads);

// y_t = x_t - gamma * Omega_{t-1}.
DenseVector AuxiliaryPoint(const DenseVector& x, const DenseVector& omega_prev,
                           double gamma);

struct AnalysisSnapshot {
  DenseVector omega;
  DenseVector xi;
  DenseVector y;
  double grad_norm_sq = 0.0;
};

// One recorded iteration t, taking x_t to x_{t+1}.
struct TrajectoryStep {
  DenseVector x;               // x_t
  DenseVector mean_grad;       // (1/n) sum_i grad F(x_t; zeta_t^(i))
  DenseVector applied_update;  // x_{t+1} - x_t
  DenseVector omega;           // Omega_t, after this step's updates
  double gamma = 0.0;
  double grad_norm_sq = 0.0;   // ||grad f(x_t)||^2
  double server_delta_sq = 0.0;
  std::vector<double> worker_delta_sq;
  std::vector<double> worker_grad_norm;  // ||grad F(x_t; zeta_t^(i))||
};

struct Trajectory {
  std::size_t num_workers = 0;
  std::vector<TrajectoryStep> steps;
  std::optional<DenseVector> final_x;  // x_T
};

// Largest per-step ||applied_update - ClosedFormUpdate(...)|| (Omega_{-1}
// is zero). Needs the per-step data only.
double MaxClosedFormDeviation(const Trajectory& trajectory);

// Largest per-step ||(y_{t+1} - y_t) + gamma_t * g_t||.
double MaxAuxiliaryDeviation(const Trajectory& trajectory);

// ||(x_0 - x_T) - gamma (sum_t g_t - Omega_{T-1})|| / (1 + ||gamma sum g_t||).
// Requires a constant step size; throws kIncompleteTrajectory without x_T.
double TelescopingCheck(const Trajectory& trajectory);

// 1 / (4L + sigma sqrt(T/n) + epsilon^(2/3) T^(1/3)).
double LrCorollary(double L, double sigma, double epsilon, long long T,
                   long long n);

struct BoundParams {
  double L = 0.0;
  double sigma = 0.0;
  double epsilon = 0.0;
  std::optional<double> G;      // estimated along the trajectory if empty
  double alpha_sq = 0.0;
  std::optional<double> rho;    // grid search if empty
};

inline constexpr double kRhoGrid[] = {0.1, 0.5, 1.0, 2.0, 10.0};

struct ResidualBoundReport {
  std::string site;        // "server" or "worker <i>"
  bool vacuous = false;    // (1 + rho) alpha^2 >= 1 for every candidate rho
  double rho = 0.0;
  double g_hat = 0.0;
  double noise_term = 0.0;
  double bound = 0.0;      // (G^2 + noise_term) / (1 - (1 + rho) alpha^2)
  double max_residual_sq = 0.0;
  bool violated = false;
};

// The geometric-series bound for a single site. `noise_term` is sigma^2/n
// at the server and sigma^2 at a worker.
ResidualBoundReport EvaluateResidualBound(std::string site,
                                          std::span<const double> residual_sq,
                                          double g_hat, double noise_term,
                                          double alpha_sq,
                                          std::optional<double> rho);

// Checks the server and every worker. The server uses the largest averaged
// gradient norm; worker i uses its own largest local gradient norm. A
// supplied params.G overrides both estimates.
std::vector<ResidualBoundReport> ResidualBoundCheck(
    const Trajectory& trajectory, const BoundParams& params);

struct TrendReport {
  double slope = 0.0;      // least squares, per iteration
  double mean = 0.0;
  std::size_t window = 0;
  bool upward = false;
};

// Fits a line to the last `tail_fraction` of `values`. A slope counts as
// upward only if slope * window exceeds 5% of the window mean.
TrendReport ResidualTrend(std::span<const double> values,
                          double tail_fraction = 0.5);

// (1/T) sum_t ||grad f(x_t)||^2. Throws on empty input.
double TheoremMetric(std::span<const double> grad_norm_sq);
double TheoremMetric(const Trajectory& trajectory);

// Upper bound on TheoremMetric for a run of T steps at constant gamma:
// (f0_gap + L gamma^2 sigma^2 T / (2n) + 4 L^2 eps^2 gamma^3 T)
//   / ((gamma/2 - L gamma^2 / 2) T).
// Infinite when gamma * L >= 1.
double TheoremRateBound(double L, double sigma, double epsilon, double gamma,
                        long long T, long long n, double f0_gap);

}  // namespace dsqueeze

#endif  // DSQUEEZE_ANALYSIS_H_
