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

#ifndef DGIN_NUMERICS_PARAMETER_H_
#define DGIN_NUMERICS_PARAMETER_H_

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dgin/numerics/value_grid.h"

namespace dgin {

// A trainable grid plus its gradient and Adam moments (all the same shape).
struct Parameter {
  Parameter(std::string name, int rows, int cols);

  std::string name;
  ValueGrid value;
  ValueGrid grad;
  ValueGrid adam_m;
  ValueGrid adam_v;
  std::int64_t step_count = 0;

  int rows() const { return value.rows(); }
  int cols() const { return value.cols(); }
};

// Expected L2 norm of a freshly initialized embedding row.
inline constexpr double kEmbeddingRowNorm = 3.0;

enum class Init {
  kGlorotUniform,  // U(-sqrt(6/(fan_in+fan_out)), +...) with fan_in=rows, fan_out=cols
  kEmbedding,  // U(-a, +a) with a = kEmbeddingRowNorm * sqrt(3/cols)
  kZeros,
  kOnes,
};

// Owns every parameter of a model. Names are unique; iteration order is
// creation order, which is also checkpoint order.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  // Creates and initializes a parameter; throws ConfigError on duplicate name.
  Parameter& Create(const std::string& name, int rows, int cols, Init init, std::mt19937_64& rng);

  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;
  bool Contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Parameter*> All();
  std::vector<const Parameter*> All() const;
  std::size_t size() const { return params_.size(); }
  std::size_t ScalarCount() const;

  void ZeroGrad();
  void Fill(double v);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

// Uniform draw in [0, 1) from the top 53 bits; same stream on every platform.
double UnitUniform(std::mt19937_64& rng);

}  // namespace dgin

#endif  // DGIN_NUMERICS_PARAMETER_H_
