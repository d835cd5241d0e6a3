// Copyright 2026 The mrcqt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "mrcqt/optim.h"

#include <cmath>

#include "mrcqt/error.h"

namespace mrcqt {

void AdamStep(ModelParams& params, AdamState& state, const AdamConfig& config) {
  for (const auto& [name, p] : params.trainable) {
    const auto m = state.m.find(name);
    const auto v = state.v.find(name);
    const bool fresh = m == state.m.end() && v == state.v.end();
    if (!fresh && (m == state.m.end() || v == state.v.end() ||
                   m->second.size() != p.size() || v->second.size() != p.size())) {
      throw SizeError("adam: optimizer state does not match parameter " + name);
    }
  }
  if (state.m.size() > params.trainable.size()) {
    throw SizeError("adam: optimizer state has tensors the model lacks");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(config.beta1, t);
  const double correct2 = 1.0 - std::pow(config.beta2, t);
  for (auto& [name, p] : params.trainable) {
    std::vector<double>& m = state.m[name];
    std::vector<double>& v = state.v[name];
    m.resize(p.size(), 0.0);
    v.resize(p.size(), 0.0);
    const std::span<const double> g = p.grad();
    std::span<double> w = p.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * gi;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * gi * gi;
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      w[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

void EmaUpdate(ModelParams& ema, const ModelParams& params, double decay) {
  if (ema.trainable.size() != params.trainable.size()) {
    throw SizeError("ema: parameter trees differ in size");
  }
  for (const auto& [name, p] : params.trainable) {
    const auto it = ema.trainable.find(name);
    if (it == ema.trainable.end() || it->second.shape() != p.shape()) {
      throw SizeError("ema: parameter tree mismatch at " + name);
    }
  }
  for (auto& [name, e] : ema.trainable) {
    const std::span<const double> src = params.trainable.at(name).data();
    std::span<double> dst = e.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = decay * dst[i] + (1.0 - decay) * src[i];
    }
  }
}

double GradNorm(const ModelParams& params) {
  double sum = 0.0;
  for (const auto& [name, p] : params.trainable) {
    for (double g : p.grad()) sum += g * g;
  }
  return std::sqrt(sum);
}

void ZeroGrad(ModelParams& params) {
  for (auto& [name, p] : params.trainable) p.ZeroGrad();
}

}  // namespace mrcqt
