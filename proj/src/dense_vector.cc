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

#include "dsqueeze/dense_vector.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "dsqueeze/error.h"

namespace dsqueeze {

namespace {

// x * 0 is NaN exactly when x is not finite. Four accumulators keep the
// scan from serializing on one add chain.
bool AllFinite(const std::vector<double>& v) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= v.size(); i += 4) {
    a0 += v[i] * 0.0;
    a1 += v[i + 1] * 0.0;
    a2 += v[i + 2] * 0.0;
    a3 += v[i + 3] * 0.0;
  }
  for (; i < v.size(); ++i) a0 += v[i] * 0.0;
  return !std::isnan(a0 + a1 + a2 + a3);
}

}  // namespace

DenseVector::DenseVector(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "DenseVector needs dim >= 1");
  }
  if (AllFinite(values_)) return;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::kNonFinite,
                  "non-finite entry at index " + std::to_string(i));
    }
  }
}

DenseVector::DenseVector(std::initializer_list<double> values)
    : DenseVector(std::vector<double>(values)) {}

DenseVector DenseVector::Zeros(std::size_t dim) {
  return DenseVector(std::vector<double>(dim, 0.0));
}

void CheckSameDim(const DenseVector& x, const DenseVector& y,
                  const char* context) {
  if (x.dim() != y.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(context) + ": " + std::to_string(x.dim()) +
                    " vs " + std::to_string(y.dim()));
  }
}

DenseVector Axpy(double a, const DenseVector& x, const DenseVector& y) {
  CheckSameDim(x, y, "Axpy");
  if (!std::isfinite(a)) {
    throw Error(ErrorCode::kNonFinite, "Axpy: non-finite scale");
  }
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + y[i];
  return DenseVector(std::move(out));
}

DenseVector Add(const DenseVector& x, const DenseVector& y) {
  CheckSameDim(x, y, "Add");
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return DenseVector(std::move(out));
}

DenseVector Subtract(const DenseVector& x, const DenseVector& y) {
  CheckSameDim(x, y, "Subtract");
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return DenseVector(std::move(out));
}

DenseVector Scale(double a, const DenseVector& x) {
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i];
  return DenseVector(std::move(out));
}

DenseVector Hadamard(const DenseVector& x, const DenseVector& y) {
  CheckSameDim(x, y, "Hadamard");
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return DenseVector(std::move(out));
}

double Dot(const DenseVector& x, const DenseVector& y) {
  CheckSameDim(x, y, "Dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) sum += x[i] * y[i];
  return sum;
}

double SquaredNorm(const DenseVector& x) {
  double sum = 0.0;
  for (double v : x.values()) sum += v * v;
  return sum;
}

double L2Norm(const DenseVector& x) {
  // Fast path unless the sum of squares overflowed or came close to
  // underflowing.
  const double sum_sq = SquaredNorm(x);
  if (std::isfinite(sum_sq) && sum_sq > 1e-200) return std::sqrt(sum_sq);
  double scale = 0.0;
  for (double v : x.values()) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double sum = 0.0;
  for (double v : x.values()) {
    const double r = v / scale;
    sum += r * r;
  }
  return scale * std::sqrt(sum);
}

double MaxAbsDiff(const DenseVector& x, const DenseVector& y) {
  CheckSameDim(x, y, "MaxAbsDiff");
  double worst = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    worst = std::max(worst, std::abs(x[i] - y[i]));
  }
  return worst;
}

DenseVector Mean(std::span<const DenseVector> xs) {
  if (xs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "Mean of zero vectors");
  }
  std::vector<double> sum = xs.front().ToStdVector();
  for (std::size_t k = 1; k < xs.size(); ++k) {
    CheckSameDim(xs.front(), xs[k], "Mean");
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += xs[k][i];
  }
  const double count = static_cast<double>(xs.size());
  for (double& v : sum) v /= count;
  return DenseVector(std::move(sum));
}

std::ostream& operator<<(std::ostream& os, const DenseVector& x) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << '[';
  for (std::size_t i = 0; i < x.dim(); ++i) os << (i ? ", " : "") << x[i];
  os.precision(old);
  return os << ']';
}

}  // namespace dsqueeze
