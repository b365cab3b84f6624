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

#ifndef DSQUEEZE_DENSE_VECTOR_H_
#define DSQUEEZE_DENSE_VECTOR_H_

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace dsqueeze {

// Flat vector of doubles with dim >= 1 and only finite entries. Every
// constructor validates both, so any DenseVector in flight is well formed.
class DenseVector {
 public:
  explicit DenseVector(std::vector<double> values);
  DenseVector(std::initializer_list<double> values);

  static DenseVector Zeros(std::size_t dim);

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  // Copies the entries out for callers that need to build a new vector.
  std::vector<double> ToStdVector() const& { return values_; }
  std::vector<double> ToStdVector() && { return std::move(values_); }

  bool operator==(const DenseVector& other) const = default;

 private:
  std::vector<double> values_;
};

// Returns a * x + y.
DenseVector Axpy(double a, const DenseVector& x, const DenseVector& y);
DenseVector Add(const DenseVector& x, const DenseVector& y);
DenseVector Subtract(const DenseVector& x, const DenseVector& y);
DenseVector Scale(double a, const DenseVector& x);
DenseVector Hadamard(const DenseVector& x, const DenseVector& y);

double Dot(const DenseVector& x, const DenseVector& y);
double SquaredNorm(const DenseVector& x);
// Scaled by the largest entry so that it neither overflows nor underflows.
double L2Norm(const DenseVector& x);
double MaxAbsDiff(const DenseVector& x, const DenseVector& y);

// Arithmetic mean. Accumulates in index order, then divides once.
DenseVector Mean(std::span<const DenseVector> xs);

// Prints "[a, b, c]" with full precision.
std::ostream& operator<<(std::ostream& os, const DenseVector& x);

void CheckSameDim(const DenseVector& x, const DenseVector& y,
                  const char* context);

}  // namespace dsqueeze

#endif  // DSQUEEZE_DENSE_VECTOR_H_
