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

#include "mrcqt/cqt_ops.h"

#include <utility>

#include "mrcqt/error.h"
#include "mrcqt/kernels.h"
#include "mrcqt/ops.h"

namespace mrcqt {

Tensor CqtAnalysis(const Tensor& signal,
                   std::shared_ptr<const MultiResCqt> transform) {
  if (signal.shape() != Shape{transform->signal_length()}) {
    throw SizeError("cqt analysis: signal shape " +
                    ShapeToString(signal.shape()) + ", bank expects [" +
                    std::to_string(transform->signal_length()) + "]");
  }
  std::vector<double> packed =
      PackCoefficients(transform->Forward(signal.data()), transform->bank());
  const std::size_t total = packed.size();
  auto sn = signal.node();
  return MakeResult({total}, std::move(packed), {signal},
                    [sn, transform](TensorNode& self) {
                      if (!sn->requires_grad) return;
                      const std::vector<double> g = transform->ForwardVjp(
                          UnpackCoefficients(self.grad, transform->bank()));
                      kernels::Axpy(1.0, g.data(), sn->EnsureGrad().data(),
                                    g.size());
                    });
}

Tensor CqtSynthesis(const Tensor& packed,
                    std::shared_ptr<const MultiResCqt> transform) {
  const CoefficientLayout layout(transform->bank());
  if (packed.shape() != Shape{layout.total}) {
    throw SizeError("cqt synthesis: coefficient shape " +
                    ShapeToString(packed.shape()) + ", bank expects [" +
                    std::to_string(layout.total) + "]");
  }
  std::vector<double> signal = transform->Inverse(
      UnpackCoefficients(packed.data(), transform->bank()));
  const std::size_t n = signal.size();
  auto pn = packed.node();
  return MakeResult({n}, std::move(signal), {packed},
                    [pn, transform](TensorNode& self) {
                      if (!pn->requires_grad) return;
                      const std::vector<double> g = PackCoefficients(
                          transform->InverseVjp(self.grad), transform->bank());
                      kernels::Axpy(1.0, g.data(), pn->EnsureGrad().data(),
                                    g.size());
                    });
}

GridTensors SplitGrids(const Tensor& packed, const FilterBank& bank) {
  const CoefficientLayout layout(bank);
  if (packed.shape() != Shape{layout.total}) {
    throw SizeError("split grids: shape " + ShapeToString(packed.shape()));
  }
  std::vector<std::size_t> sizes;
  for (const OctaveLayout& o : bank.octaves) {
    sizes.push_back(2 * static_cast<std::size_t>(o.bins) * o.frame_count);
  }
  sizes.push_back(2 * bank.lowpass.frame_count);
  sizes.push_back(2 * bank.highpass.frame_count);
  std::vector<Tensor> parts = Split(packed, 0, sizes);
  GridTensors grids;
  for (std::size_t i = 0; i < bank.octaves.size(); ++i) {
    const OctaveLayout& o = bank.octaves[i];
    grids.octaves.push_back(Reshape(
        parts[i], {2, static_cast<std::size_t>(o.bins), o.frame_count}));
  }
  grids.lowpass = Reshape(parts[bank.octaves.size()],
                          {2, 1, bank.lowpass.frame_count});
  grids.highpass = Reshape(parts[bank.octaves.size() + 1],
                           {2, 1, bank.highpass.frame_count});
  return grids;
}

Tensor JoinGrids(const GridTensors& grids, const FilterBank& bank) {
  if (grids.octaves.size() != bank.octaves.size()) {
    throw SizeError("join grids: " + std::to_string(grids.octaves.size()) +
                    " octave grids, bank has " +
                    std::to_string(bank.octaves.size()));
  }
  std::vector<Tensor> flat;
  for (std::size_t i = 0; i < grids.octaves.size(); ++i) {
    const OctaveLayout& o = bank.octaves[i];
    const Shape want{2, static_cast<std::size_t>(o.bins), o.frame_count};
    if (grids.octaves[i].shape() != want) {
      throw SizeError("join grids: octave " + std::to_string(i + 1) +
                      " has shape " + ShapeToString(grids.octaves[i].shape()) +
                      ", expected " + ShapeToString(want));
    }
    flat.push_back(Reshape(grids.octaves[i], {grids.octaves[i].size()}));
  }
  flat.push_back(Reshape(grids.lowpass, {grids.lowpass.size()}));
  flat.push_back(Reshape(grids.highpass, {grids.highpass.size()}));
  return Concat(flat, 0);
}

}  // namespace mrcqt
