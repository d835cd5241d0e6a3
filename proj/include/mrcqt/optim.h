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


#ifndef MRCQT_OPTIM_H_
#define MRCQT_OPTIM_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mrcqt/net.h"

namespace mrcqt {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  uint64_t step = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

// One bias-corrected Adam update from the gradients held by `params`
// (a missing gradient counts as zero). Throws SizeError when the state does
// not match the parameter tree.
void AdamStep(ModelParams& params, AdamState& state, const AdamConfig& config);

// ema <- decay * ema + (1 - decay) * params over the trainable tensors.
// Throws SizeError naming the first mismatching tensor.
void EmaUpdate(ModelParams& ema, const ModelParams& params, double decay);

// Euclidean norm of all trainable gradients.
double GradNorm(const ModelParams& params);
void ZeroGrad(ModelParams& params);

}  // namespace mrcqt

#endif  // MRCQT_OPTIM_H_
