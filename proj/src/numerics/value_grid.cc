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

#include "dgin/numerics/value_grid.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dgin/error.h"

namespace dgin {

ValueGrid::ValueGrid(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw DimensionError("negative grid shape " + dgin::ShapeString(rows, cols));
  values_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

ValueGrid::ValueGrid(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows < 0 || cols < 0 || values_.size() != static_cast<std::size_t>(rows) * cols) {
    throw DimensionError("grid " + dgin::ShapeString(rows, cols) + " given " +
                         std::to_string(values_.size()) + " values");
  }
}

ValueGrid ValueGrid::FromRows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(r) * c);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) throw DimensionError("ragged rows in FromRows");
    v.insert(v.end(), row.begin(), row.end());
  }
  return ValueGrid(r, c, std::move(v));
}

ValueGrid ValueGrid::Identity(int n) {
  ValueGrid g(n, n);
  for (int i = 0; i < n; ++i) g(i, i) = 1.0;
  return g;
}

void ValueGrid::Fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool ValueGrid::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

std::string ValueGrid::ShapeString() const { return dgin::ShapeString(rows_, cols_); }

bool ValueGrid::operator==(const ValueGrid& other) const {
  return SameShape(other) &&
         (values_.empty() ||
          std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(double)) == 0);
}

std::string ShapeString(int rows, int cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

double MaxAbsDiff(const ValueGrid& a, const ValueGrid& b) {
  if (!a.SameShape(b)) {
    throw DimensionError("MaxAbsDiff shapes " + a.ShapeString() + " vs " + b.ShapeString());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace dgin
