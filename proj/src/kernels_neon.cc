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

#include "mrcqt/kernels.h"

#include <cmath>

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

namespace mrcqt::kernels {
namespace {

void AxpyImpl(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double DotImpl(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void MulImpl(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void MulAccImpl(const double* x, const double* y, double* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(acc + i,
              vfmaq_f64(vld1q_f64(acc + i), vld1q_f64(x + i), vld1q_f64(y + i)));
  }
  for (; i < n; ++i) acc[i] += x[i] * y[i];
}

double SumImpl(const double* x, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
  double acc = vaddvq_f64(acc0);
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double SumSqDevImpl(const double* x, double mean, std::size_t n) {
  const float64x2_t vm = vdupq_n_f64(mean);
  float64x2_t acc0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vm);
    acc0 = vfmaq_f64(acc0, d, d);
  }
  double acc = vaddvq_f64(acc0);
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    acc += d * d;
  }
  return acc;
}

void ShiftScaleImpl(const double* x, double shift, double a, double* out,
                std::size_t n) {
  const float64x2_t vs = vdupq_n_f64(shift);
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vmulq_f64(vsubq_f64(vld1q_f64(x + i), vs), va));
  }
  for (; i < n; ++i) out[i] = (x[i] - shift) * a;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

void GeluImpl(const double* x, double* out, double* slope, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    out[i] = 0.5 * v * (1.0 + t);
    if (slope == nullptr) continue;
    slope[i] = 0.5 * (1.0 + t) +
               0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
  }
}

void GemmRowsImpl(const double* w, std::size_t ldw, const double* const* x,
                  double* const* y, std::size_t m, std::size_t k,
                  std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) AxpyImpl(w[i * ldw + j], x[j], y[i], n);
  }
}

void GemmNtImpl(const double* const* a, const double* const* b, double* c,
                std::size_t ldc, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) c[i * ldc + j] += DotImpl(a[i], b[j], n);
  }
}

}  // namespace

const KernelTable* NeonKernels() {
  static const KernelTable table{Isa::kNeon, AxpyImpl, DotImpl, MulImpl,
                                 MulAccImpl, SumImpl, SumSqDevImpl, ShiftScaleImpl,
                                 GeluImpl, GemmRowsImpl, GemmNtImpl};
  return &table;
}

}  // namespace mrcqt::kernels

#else

namespace mrcqt::kernels {
const KernelTable* NeonKernels() { return nullptr; }
}  // namespace mrcqt::kernels

#endif
