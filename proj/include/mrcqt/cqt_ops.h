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

#ifndef MRCQT_CQT_OPS_H_
#define MRCQT_CQT_OPS_H_

#include <memory>
#include <vector>

#include "mrcqt/cqt.h"
#include "mrcqt/tensor.h"

namespace mrcqt {

// Differentiable analysis: waveform [N] -> packed coefficients [total] in
// CoefficientLayout order. The backward rule is the exact adjoint.
Tensor CqtAnalysis(const Tensor& signal,
                   std::shared_ptr<const MultiResCqt> transform);
// Differentiable synthesis: packed coefficients [total] -> waveform [N].
Tensor CqtSynthesis(const Tensor& packed,
                    std::shared_ptr<const MultiResCqt> transform);

// Packed coefficients as tensors: one [2, bins, frames] grid per octave
// (lowest first), then lowpass [2, 1, M] and highpass [2, 1, M].
struct GridTensors {
  std::vector<Tensor> octaves;
  Tensor lowpass;
  Tensor highpass;
};
GridTensors SplitGrids(const Tensor& packed, const FilterBank& bank);
Tensor JoinGrids(const GridTensors& grids, const FilterBank& bank);

}  // namespace mrcqt

#endif  // MRCQT_CQT_OPS_H_
