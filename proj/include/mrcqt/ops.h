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

#ifndef MRCQT_OPS_H_
#define MRCQT_OPS_H_

#include <cstddef>
#include <vector>

#include "mrcqt/tensor.h"

// Differentiable ops. Feature maps are laid out [channels, freq, time].
// Convolutions use "same" output size with reflect padding.
namespace mrcqt {

Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double factor);
Tensor Sum(const Tensor& a);
Tensor Mean(const Tensor& a);
// mean((a - b)^2)
Tensor Mse(const Tensor& a, const Tensor& b);
Tensor Reshape(const Tensor& a, Shape shape);

// x: [..., in], weight: [out, in], bias: [out] or undefined.
Tensor Linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
// x: [in_ch, F, T], weight: [out_ch, in_ch], bias: [out_ch] or undefined.
Tensor Conv1x1(const Tensor& x, const Tensor& weight, const Tensor& bias);
// Kernel taps run along the frequency axis, spaced `dilation` bins apart.
// weight: [out_ch, in_ch, K] with K odd.
Tensor ConvFreqDilated(const Tensor& x, const Tensor& weight,
                       std::size_t dilation);
// weight: [out_ch, in_ch, K] with K odd, taps along time.
Tensor ConvTime(const Tensor& x, const Tensor& weight);

// Per-group standardization (population variance, eps 1e-6 inside the square
// root) followed by a per-channel gain; no additive shift. All-zero input
// maps to zero.
Tensor GroupNormShiftFree(const Tensor& x, std::size_t groups,
                          const Tensor& gain);
// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
Tensor Gelu(const Tensor& x);
// x * (1 + scale[c]) for every channel c of x: [C, ...], scale: [C].
Tensor FilmScale(const Tensor& x, const Tensor& scale);

Tensor Concat(const std::vector<Tensor>& parts, std::size_t axis);
std::vector<Tensor> Split(const Tensor& x, std::size_t axis,
                          const std::vector<std::size_t>& sizes);

// 2x anti-aliased resampling along `axis` (see AxisResampler).
Tensor Downsample(const Tensor& x, std::size_t axis);
Tensor Upsample(const Tensor& x, std::size_t axis);

}  // namespace mrcqt

#endif  // MRCQT_OPS_H_
