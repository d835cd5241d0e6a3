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

// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include "mrcqt/kernels.h"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace mrcqt::kernels {
namespace {

inline double HorizontalSum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

void AxpyImpl(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                       _mm256_loadu_pd(y + i));
    const __m256d y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4),
                                       _mm256_loadu_pd(y + i + 4));
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double DotImpl(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                           _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                           acc0);
  }
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void MulImpl(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void MulAccImpl(const double* x, const double* y, double* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(acc + i,
                     _mm256_fmadd_pd(_mm256_loadu_pd(x + i),
                                     _mm256_loadu_pd(y + i),
                                     _mm256_loadu_pd(acc + i)));
  }
  for (; i < n; ++i) acc[i] += x[i] * y[i];
}

double SumImpl(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double SumSqDevImpl(const double* x, double mean, std::size_t n) {
  const __m256d vm = _mm256_set1_pd(mean);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), vm);
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), vm);
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), vm);
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
  }
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    acc += d * d;
  }
  return acc;
}

void ShiftScaleImpl(const double* x, double shift, double a, double* out,
                std::size_t n) {
  const __m256d vs = _mm256_set1_pd(shift);
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i,
                     _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vs),
                                   va));
  }
  for (; i < n; ++i) out[i] = (x[i] - shift) * a;
}

// exp(v) for v in [-708, 708]: 2^n * e^r with |r| <= ln2 / 2 and a degree-13
// Taylor polynomial (truncation below 1e-17 relative).
inline __m256d Exp(__m256d v) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  v = _mm256_max_pd(_mm256_min_pd(v, _mm256_set1_pd(708.0)),
                    _mm256_set1_pd(-708.0));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(v, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, v);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);
  static constexpr double kInvFact[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0,
      1.0 / 3628800.0,    1.0 / 362880.0,    1.0 / 40320.0,
      1.0 / 5040.0,       1.0 / 720.0,       1.0 / 120.0,
      1.0 / 24.0,         1.0 / 6.0,         0.5,
      1.0,                1.0};
  __m256d p = _mm256_set1_pd(kInvFact[0]);
  for (int i = 1; i < 14; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kInvFact[i]));
  // 2^n through the exponent field.
  const __m128i ni = _mm256_cvtpd_epi32(n);
  const __m256i bits = _mm256_slli_epi64(
      _mm256_add_epi64(_mm256_cvtepi32_epi64(ni), _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

void GeluImpl(const double* x, double* out, double* slope, std::size_t n) {
  constexpr double kC = 0.7978845608028654;
  constexpr double kA = 0.044715;
  const __m256d c = _mm256_set1_pd(kC);
  const __m256d a = _mm256_set1_pd(kA);
  const __m256d a3 = _mm256_set1_pd(3.0 * kA);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d limit = _mm256_set1_pd(40.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d v2 = _mm256_mul_pd(v, v);
    const __m256d u = _mm256_mul_pd(c, _mm256_fmadd_pd(_mm256_mul_pd(a, v2), v, v));
    // tanh(u) = 1 - 2 / (e^{2u} + 1), saturated well before overflow.
    const __m256d u2 = _mm256_max_pd(_mm256_min_pd(_mm256_add_pd(u, u), limit),
                                     _mm256_sub_pd(_mm256_setzero_pd(), limit));
    const __m256d e = Exp(u2);
    const __m256d ep1 = _mm256_add_pd(e, one);
    const __m256d r = _mm256_div_pd(one, ep1);
    const __m256d t = _mm256_fnmadd_pd(two, r, one);
    const __m256d onept = _mm256_add_pd(one, t);
    const __m256d hv = _mm256_mul_pd(half, v);
    _mm256_storeu_pd(out + i, _mm256_mul_pd(hv, onept));
    if (slope == nullptr) continue;
    // 1 - t^2 = 4e / (e + 1)^2 without cancellation in the tails.
    const __m256d sech2 = _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(4.0), e),
                                        _mm256_mul_pd(r, r));
    const __m256d du = _mm256_mul_pd(c, _mm256_fmadd_pd(a3, v2, one));
    const __m256d d = _mm256_fmadd_pd(_mm256_mul_pd(hv, sech2), du,
                                      _mm256_mul_pd(half, onept));
    _mm256_storeu_pd(slope + i, d);
  }
  for (; i < n; ++i) {
    const double v = x[i];
    const double t = std::tanh(kC * (v + kA * v * v * v));
    out[i] = 0.5 * v * (1.0 + t);
    if (slope == nullptr) continue;
    slope[i] = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kC * (1.0 + 3.0 * kA * v * v);
  }
}

constexpr std::size_t kColumnTile = 128;

// One y row, columns [t0, t1).
void GemmOneRow(const double* w, const double* const* x, double* y,
                std::size_t k, std::size_t t0, std::size_t t1) {
  std::size_t t = t0;
  for (; t + 8 <= t1; t += 8) {
    __m256d a0 = _mm256_loadu_pd(y + t);
    __m256d a1 = _mm256_loadu_pd(y + t + 4);
    for (std::size_t j = 0; j < k; ++j) {
      const __m256d b = _mm256_broadcast_sd(w + j);
      a0 = _mm256_fmadd_pd(b, _mm256_loadu_pd(x[j] + t), a0);
      a1 = _mm256_fmadd_pd(b, _mm256_loadu_pd(x[j] + t + 4), a1);
    }
    _mm256_storeu_pd(y + t, a0);
    _mm256_storeu_pd(y + t + 4, a1);
  }
  for (; t + 4 <= t1; t += 4) {
    __m256d a0 = _mm256_loadu_pd(y + t);
    for (std::size_t j = 0; j < k; ++j) {
      a0 = _mm256_fmadd_pd(_mm256_broadcast_sd(w + j),
                           _mm256_loadu_pd(x[j] + t), a0);
    }
    _mm256_storeu_pd(y + t, a0);
  }
  for (; t < t1; ++t) {
    double acc = y[t];
    for (std::size_t j = 0; j < k; ++j) acc += w[j] * x[j][t];
    y[t] = acc;
  }
}

// Four y rows at once: each x load feeds four FMAs.
void GemmFourRows(const double* w, std::size_t ldw, const double* const* x,
                  double* const* y, std::size_t k, std::size_t t0,
                  std::size_t t1) {
  const double* w0 = w;
  const double* w1 = w + ldw;
  const double* w2 = w + 2 * ldw;
  const double* w3 = w + 3 * ldw;
  double* y0 = y[0];
  double* y1 = y[1];
  double* y2 = y[2];
  double* y3 = y[3];
  std::size_t t = t0;
  for (; t + 8 <= t1; t += 8) {
    __m256d a00 = _mm256_loadu_pd(y0 + t), a01 = _mm256_loadu_pd(y0 + t + 4);
    __m256d a10 = _mm256_loadu_pd(y1 + t), a11 = _mm256_loadu_pd(y1 + t + 4);
    __m256d a20 = _mm256_loadu_pd(y2 + t), a21 = _mm256_loadu_pd(y2 + t + 4);
    __m256d a30 = _mm256_loadu_pd(y3 + t), a31 = _mm256_loadu_pd(y3 + t + 4);
    for (std::size_t j = 0; j < k; ++j) {
      const __m256d x0 = _mm256_loadu_pd(x[j] + t);
      const __m256d x1 = _mm256_loadu_pd(x[j] + t + 4);
      __m256d b = _mm256_broadcast_sd(w0 + j);
      a00 = _mm256_fmadd_pd(b, x0, a00);
      a01 = _mm256_fmadd_pd(b, x1, a01);
      b = _mm256_broadcast_sd(w1 + j);
      a10 = _mm256_fmadd_pd(b, x0, a10);
      a11 = _mm256_fmadd_pd(b, x1, a11);
      b = _mm256_broadcast_sd(w2 + j);
      a20 = _mm256_fmadd_pd(b, x0, a20);
      a21 = _mm256_fmadd_pd(b, x1, a21);
      b = _mm256_broadcast_sd(w3 + j);
      a30 = _mm256_fmadd_pd(b, x0, a30);
      a31 = _mm256_fmadd_pd(b, x1, a31);
    }
    _mm256_storeu_pd(y0 + t, a00);
    _mm256_storeu_pd(y0 + t + 4, a01);
    _mm256_storeu_pd(y1 + t, a10);
    _mm256_storeu_pd(y1 + t + 4, a11);
    _mm256_storeu_pd(y2 + t, a20);
    _mm256_storeu_pd(y2 + t + 4, a21);
    _mm256_storeu_pd(y3 + t, a30);
    _mm256_storeu_pd(y3 + t + 4, a31);
  }
  if (t < t1) {
    GemmOneRow(w0, x, y0, k, t, t1);
    GemmOneRow(w1, x, y1, k, t, t1);
    GemmOneRow(w2, x, y2, k, t, t1);
    GemmOneRow(w3, x, y3, k, t, t1);
  }
}

void GemmRowsImpl(const double* w, std::size_t ldw, const double* const* x,
                  double* const* y, std::size_t m, std::size_t k,
                  std::size_t n) {
  for (std::size_t t0 = 0; t0 < n; t0 += kColumnTile) {
    const std::size_t t1 = std::min(n, t0 + kColumnTile);
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) GemmFourRows(w + i * ldw, ldw, x, y + i, k, t0, t1);
    for (; i < m; ++i) GemmOneRow(w + i * ldw, x, y[i], k, t0, t1);
  }
}

// 2 x 4 block of dot products sharing loads.
// Register block of r x q dot products over columns [t0, t1).
template <int R, int Q>
void GemmNtBlock(const double* const* a, const double* const* b, double* c,
                 std::size_t ldc, std::size_t i, std::size_t j, std::size_t t0,
                 std::size_t t1) {
  __m256d acc[R][Q];
  for (auto& row : acc) {
    for (auto& v : row) v = _mm256_setzero_pd();
  }
  std::size_t t = t0;
  for (; t + 4 <= t1; t += 4) {
    __m256d av[R];
    for (int r = 0; r < R; ++r) av[r] = _mm256_loadu_pd(a[i + r] + t);
    for (int q = 0; q < Q; ++q) {
      const __m256d bq = _mm256_loadu_pd(b[j + q] + t);
      for (int r = 0; r < R; ++r) acc[r][q] = _mm256_fmadd_pd(av[r], bq, acc[r][q]);
    }
  }
  for (int r = 0; r < R; ++r) {
    for (int q = 0; q < Q; ++q) {
      double sum = HorizontalSum(acc[r][q]);
      for (std::size_t u = t; u < t1; ++u) sum += a[i + r][u] * b[j + q][u];
      c[(i + r) * ldc + j + q] += sum;
    }
  }
}

// Column tiles keep the a/b panels of one pass resident in cache.
constexpr std::size_t kNtColumnTile = 256;

void GemmNtImpl(const double* const* a, const double* const* b, double* c,
                std::size_t ldc, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t t0 = 0; t0 < n; t0 += kNtColumnTile) {
    const std::size_t t1 = std::min(n, t0 + kNtColumnTile);
    std::size_t i = 0;
    for (; i + 3 <= m; i += 3) {
      std::size_t j = 0;
      for (; j + 4 <= k; j += 4) GemmNtBlock<3, 4>(a, b, c, ldc, i, j, t0, t1);
      for (; j < k; ++j) GemmNtBlock<3, 1>(a, b, c, ldc, i, j, t0, t1);
    }
    for (; i < m; ++i) {
      std::size_t j = 0;
      for (; j + 4 <= k; j += 4) GemmNtBlock<1, 4>(a, b, c, ldc, i, j, t0, t1);
      for (; j < k; ++j) GemmNtBlock<1, 1>(a, b, c, ldc, i, j, t0, t1);
    }
  }
}

}  // namespace

const KernelTable* Avx2Kernels() {
  static const KernelTable table{Isa::kAvx2, AxpyImpl, DotImpl, MulImpl,
                                 MulAccImpl, SumImpl, SumSqDevImpl, ShiftScaleImpl,
                                 GeluImpl, GemmRowsImpl, GemmNtImpl};
  return &table;
}

}  // namespace mrcqt::kernels

#else

namespace mrcqt::kernels {
const KernelTable* Avx2Kernels() { return nullptr; }
}  // namespace mrcqt::kernels

#endif
