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

#ifndef DGIN_TESTS_FIXTURES_H_
#define DGIN_TESTS_FIXTURES_H_

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "dgin/cli/cli.h"
#include "dgin/model/model.h"
#include "dgin/synth/synthgen.h"

namespace dgin::testing_util {

// A generated world with a store built for one model configuration.
struct World {
  GeneratedData data;
  std::vector<Instance> train, test;
  std::unique_ptr<BehaviorStore> store;
};

inline GenConfig SmallGenConfig(int users = 16, std::uint64_t seed = 5) {
  GenConfig g;
  g.seed = seed;
  g.n_users = users;
  g.n_items = 120;
  g.n_categories = 10;
  g.mean_events_per_user = 200;
  g.menu_min = 8;
  g.menu_max = 20;
  g.train_per_user = 6;
  g.test_per_user = 2;
  return g;
}

inline World MakeWorld(const GenConfig& gen, const ModelConfig& mc) {
  World w;
  w.data = Generate(gen);
  SplitByLastDay(w.data.instances, w.train, w.test);
  w.store = std::make_unique<BehaviorStore>(BuildStore(w.data.events, StoreConfigFor(mc)));
  return w;
}

inline ModelConfig TinyModelConfig(Variant v, KeyField key = KeyField::kItemId) {
  ModelConfig mc;
  mc.d = 4;
  mc.heads = 2;
  mc.B = 2;
  mc.G = 3;
  mc.T = 2;
  mc.baseline_window = 3;
  mc.key_field = key;
  mc.variant = v;
  mc.mlp_widths = {8, 4, 1};
  mc.seed = 3;
  return mc;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
};

// Compares backprop gradients of the mean batch loss with central
// differences. Every entry with a nonzero analytic gradient is checked, plus
// up to `zero_samples` zero-gradient entries of each parameter. Error is
// |a - f| / max(|a|, |f|, 1e-3).
inline GradCheckResult GradientCheck(DginModel& model, const PreparedBatch& batch, int zero_samples = 4,
                                     double h = 1e-5) {
  model.params().ZeroGrad();
  {
    Tape t;
    t.Backward(model.Loss(t, batch));
  }
  auto loss_at = [&]() {
    Tape t;
    return t.Value(model.Loss(t, batch))(0, 0);
  };
  GradCheckResult r;
  for (Parameter* p : model.params().All()) {
    const ValueGrid analytic = p->grad;
    std::vector<std::size_t> picks;
    int zeros = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      if (analytic.data()[i] != 0.0 || zeros++ < zero_samples) picks.push_back(i);
    }
    for (std::size_t i : picks) {
      const double saved = p->value.data()[i];
      p->value.data()[i] = saved + h;
      const double up = loss_at();
      p->value.data()[i] = saved - h;
      const double down = loss_at();
      p->value.data()[i] = saved;
      const double f = (up - down) / (2 * h);
      const double a = analytic.data()[i];
      r.max_rel_error = std::max(r.max_rel_error, std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-3}));
      ++r.checked;
    }
  }
  model.params().ZeroGrad();
  return r;
}

}  // namespace dgin::testing_util

#endif  // DGIN_TESTS_FIXTURES_H_
