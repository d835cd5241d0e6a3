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

#ifndef MRCQT_KERNELS_H_
#define MRCQT_KERNELS_H_

#include <cstddef>
#include <string_view>

// Data-parallel inner loops used by the tensor ops. Each kernel has a scalar
// reference implementation and vectorized variants; the variant is chosen
// once at startup from the CPU features and can be overridden (tests force
// each ISA in turn and compare against the scalar reference).
namespace mrcqt::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // out[i] = x[i] * y[i]
  void (*mul)(const double* x, const double* y, double* out, std::size_t n);
  // acc[i] += x[i] * y[i]
  void (*mul_acc)(const double* x, const double* y, double* acc,
                  std::size_t n);
  // sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
  // sum_i (x[i] - mean)^2
  double (*sum_sq_dev)(const double* x, double mean, std::size_t n);
  // out[i] = (x[i] - shift) * a
  void (*shift_scale)(const double* x, double shift, double a, double* out,
                      std::size_t n);
  // Tanh-form GELU: out[i] = gelu(x[i]), slope[i] = gelu'(x[i]); slope may
  // be null.
  void (*gelu)(const double* x, double* out, double* slope, std::size_t n);
  // y[i][t] += sum_j w[i * ldw + j] * x[j][t] for i < m, j < k, t < n.
  // Rows are given by pointer; y rows must not overlap each other or x.
  void (*gemm_rows)(const double* w, std::size_t ldw, const double* const* x,
                    double* const* y, std::size_t m, std::size_t k,
                    std::size_t n);
  // c[i * ldc + j] += sum_t a[i][t] * b[j][t] for i < m, j < k, t < n.
  void (*gemm_nt)(const double* const* a, const double* const* b, double* c,
                  std::size_t ldc, std::size_t m, std::size_t k,
                  std::size_t n);
};

const KernelTable& ScalarKernels();
// nullptr when the variant was not compiled in.
const KernelTable* Avx2Kernels();
const KernelTable* NeonKernels();

bool IsaSupported(Isa isa);
std::string_view IsaName(Isa isa);

// Best supported ISA unless overridden by SetActiveIsa or the MRCQT_ISA
// environment variable ("scalar", "avx2", "neon").
const KernelTable& Active();
Isa ActiveIsa();
// Throws ParameterError when the ISA is not available on this machine.
void SetActiveIsa(Isa isa);

inline void Axpy(double a, const double* x, double* y, std::size_t n) {
  Active().axpy(a, x, y, n);
}
inline double Dot(const double* x, const double* y, std::size_t n) {
  return Active().dot(x, y, n);
}
inline void Mul(const double* x, const double* y, double* out, std::size_t n) {
  Active().mul(x, y, out, n);
}
inline void MulAcc(const double* x, const double* y, double* acc,
                   std::size_t n) {
  Active().mul_acc(x, y, acc, n);
}
inline double Sum(const double* x, std::size_t n) { return Active().sum(x, n); }
inline double SumSqDev(const double* x, double mean, std::size_t n) {
  return Active().sum_sq_dev(x, mean, n);
}
inline void ShiftScale(const double* x, double shift, double a, double* out,
                       std::size_t n) {
  Active().shift_scale(x, shift, a, out, n);
}

inline void Gelu(const double* x, double* out, double* slope, std::size_t n) {
  Active().gelu(x, out, slope, n);
}
inline void GemmRows(const double* w, std::size_t ldw, const double* const* x,
                     double* const* y, std::size_t m, std::size_t k,
                     std::size_t n) {
  Active().gemm_rows(w, ldw, x, y, m, k, n);
}
inline void GemmNt(const double* const* a, const double* const* b, double* c,
                   std::size_t ldc, std::size_t m, std::size_t k,
                   std::size_t n) {
  Active().gemm_nt(a, b, c, ldc, m, k, n);
}

}  // namespace mrcqt::kernels

#endif  // MRCQT_KERNELS_H_
