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

#include "dgin/numerics/parameter.h"

#include <cmath>

#include "dgin/error.h"

namespace dgin {

Parameter::Parameter(std::string name, int rows, int cols)
    : name(std::move(name)),
      value(rows, cols),
      grad(rows, cols),
      adam_m(rows, cols),
      adam_v(rows, cols) {}

double UnitUniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Parameter& ParameterSet::Create(const std::string& name, int rows, int cols, Init init,
                                std::mt19937_64& rng) {
  if (index_.count(name) != 0) throw ConfigError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>(name, rows, cols);
  switch (init) {
    case Init::kGlorotUniform: {
      const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (double& v : p->value.values()) v = (2.0 * UnitUniform(rng) - 1.0) * limit;
      break;
    }
    case Init::kEmbedding: {
      const double limit = kEmbeddingRowNorm * std::sqrt(3.0 / static_cast<double>(cols));
      for (double& v : p->value.values()) v = (2.0 * UnitUniform(rng) - 1.0) * limit;
      break;
    }
    case Init::kZeros:
      break;
    case Init::kOnes:
      p->value.Fill(1.0);
      break;
  }
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterSet::Get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return *params_[it->second];
}

const Parameter& ParameterSet::Get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return *params_[it->second];
}

std::vector<Parameter*> ParameterSet::All() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterSet::All() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterSet::ScalarCount() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterSet::ZeroGrad() {
  for (auto& p : params_) p->grad.Fill(0.0);
}

void ParameterSet::Fill(double v) {
  for (auto& p : params_) p->value.Fill(v);
}

}  // namespace dgin
