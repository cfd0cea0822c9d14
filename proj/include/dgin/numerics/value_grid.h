// Copyright 2026 The DGIN Authors
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

#ifndef DGIN_NUMERICS_VALUE_GRID_H_
#define DGIN_NUMERICS_VALUE_GRID_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dgin {

// Dense row-major matrix of doubles. Activations, parameters, gradients and
// optimizer moments all live in one of these.
class ValueGrid {
 public:
  ValueGrid() = default;
  ValueGrid(int rows, int cols, double fill = 0.0);
  ValueGrid(int rows, int cols, std::vector<double> values);

  // Builds a grid from nested rows; all rows must have equal length.
  static ValueGrid FromRows(std::initializer_list<std::initializer_list<double>> rows);
  static ValueGrid Identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(int r, int c) { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const {
    return values_[static_cast<std::size_t>(r) * cols_ + c];
  }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  double* row(int r) { return values_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const {
    return values_.data() + static_cast<std::size_t>(r) * cols_;
  }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  void Fill(double v);
  bool SameShape(const ValueGrid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool AllFinite() const;
  // "3x4" style string for diagnostics.
  std::string ShapeString() const;

  // Bitwise equality of shape and contents.
  bool operator==(const ValueGrid& other) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

std::string ShapeString(int rows, int cols);

// Largest absolute elementwise difference; grids must share a shape.
double MaxAbsDiff(const ValueGrid& a, const ValueGrid& b);

}  // namespace dgin

#endif  // DGIN_NUMERICS_VALUE_GRID_H_
