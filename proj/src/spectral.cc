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

#include "mrcqt/spectral.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

#include "mrcqt/error.h"
#include "mrcqt/kernels.h"

namespace mrcqt {

void RealSignal::Validate() const {
  if (samples.empty()) throw ParameterError("signal: empty");
  if (!(sample_rate > 0.0)) throw ParameterError("signal: sample rate <= 0");
  for (double v : samples) {
    if (!std::isfinite(v)) throw ParameterError("signal: non-finite sample");
  }
}

bool IsPowerOfTwo(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t NextPowerOfTwo(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

FftPlan::FftPlan(std::size_t size) : size_(size) {
  if (!IsPowerOfTwo(size)) {
    throw SizeError("fft: length " + std::to_string(size) +
                    " is not a power of two");
  }
  bit_reverse_.resize(size);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < size) ++bits;
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1) << (bits - 1 - b);
    bit_reverse_[i] = r;
  }
  twiddles_.resize(size / 2);
  for (std::size_t k = 0; k < size / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(size);
    twiddles_[k] = Complex(std::cos(angle), std::sin(angle));
  }
}

std::shared_ptr<const FftPlan> FftPlan::Get(std::size_t size) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const FftPlan>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(size);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<const FftPlan>(size);
  cache.emplace(size, plan);
  return plan;
}

void FftPlan::Transform(std::span<Complex> data, bool inverse) const {
  if (data.size() != size_) {
    throw SizeError("fft: buffer length " + std::to_string(data.size()) +
                    " does not match plan size " + std::to_string(size_));
  }
  for (std::size_t i = 0; i < size_; ++i) {
    const std::size_t j = bit_reverse_[i];
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t half = 1; half < size_; half <<= 1) {
    const std::size_t stride = size_ / (2 * half);
    for (std::size_t start = 0; start < size_; start += 2 * half) {
      for (std::size_t k = 0; k < half; ++k) {
        Complex w = twiddles_[k * stride];
        if (inverse) w = std::conj(w);
        const Complex a = data[start + k];
        const Complex b = data[start + k + half] * w;
        data[start + k] = a + b;
        data[start + k + half] = a - b;
      }
    }
  }
}

ComplexSpectrum FftForward(std::span<const Complex> x) {
  auto plan = FftPlan::Get(x.size());
  ComplexSpectrum out(x.begin(), x.end());
  plan->Forward(out);
  return out;
}

ComplexSpectrum FftForward(std::span<const double> x) {
  auto plan = FftPlan::Get(x.size());
  ComplexSpectrum out(x.begin(), x.end());
  plan->Forward(out);
  return out;
}

std::vector<Complex> FftInverse(std::span<const Complex> spectrum) {
  auto plan = FftPlan::Get(spectrum.size());
  std::vector<Complex> out(spectrum.begin(), spectrum.end());
  plan->InverseUnscaled(out);
  const double inv_n = 1.0 / static_cast<double>(out.size());
  for (Complex& v : out) v *= inv_n;
  return out;
}

std::vector<double> MakeWindow(const WindowSpec& spec) {
  if (spec.length < 2) {
    throw ParameterError("window: length must be >= 2, got " +
                         std::to_string(spec.length));
  }
  std::vector<double> w(spec.length);
  const double n = static_cast<double>(spec.length);
  for (std::size_t i = 0; i < spec.length; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                static_cast<double>(i) / n);
  }
  return w;
}

std::size_t ReflectIndex(long long index, std::size_t n) {
  if (n == 1) return 0;
  const long long period = 2 * (static_cast<long long>(n) - 1);
  long long i = index % period;
  if (i < 0) i += period;
  if (i >= static_cast<long long>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

const std::vector<double>& AntiAliasTaps() {
  static const std::vector<double> taps = [] {
    constexpr int kTaps = 47;
    constexpr double kCutoff = 0.1875;
    constexpr double kBeta = 8.0;
    constexpr int kCenter = (kTaps - 1) / 2;
    const double norm = std::cyl_bessel_i(0.0, kBeta);
    std::vector<double> h(kTaps);
    double branch_sum[2] = {0.0, 0.0};
    for (int i = 0; i < kTaps; ++i) {
      const double n = static_cast<double>(i - kCenter);
      const double x = 2.0 * kCutoff * n;
      const double sinc =
          n == 0.0 ? 1.0
                   : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      const double r = n / kCenter;
      const double kaiser =
          std::cyl_bessel_i(0.0, kBeta * std::sqrt(1.0 - r * r)) / norm;
      h[i] = 2.0 * kCutoff * sinc * kaiser;
      branch_sum[std::abs(i - kCenter) % 2] += h[i];
    }
    for (int i = 0; i < kTaps; ++i) {
      h[i] *= 0.5 / branch_sum[std::abs(i - kCenter) % 2];
    }
    return h;
  }();
  return taps;
}

namespace {

// Four partial sums break the dependency chain of a 47-tap filter.
double ShortDot(const double* w, const double* x, std::size_t n) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    a0 += w[j] * x[j];
    a1 += w[j + 1] * x[j + 1];
    a2 += w[j + 2] * x[j + 2];
    a3 += w[j + 3] * x[j + 3];
  }
  for (; j < n; ++j) a0 += w[j] * x[j];
  return (a0 + a1) + (a2 + a3);
}

// Axes up to this length (frequency rows) also get a dense filter matrix.
constexpr std::size_t kMaxDenseLength = 256;

}  // namespace

AxisResampler::AxisResampler(ResampleDirection direction,
                             std::size_t input_length)
    : input_length_(input_length) {
  if (input_length == 0) throw SizeError("resample: empty axis");
  const std::vector<double>& h = AntiAliasTaps();
  const long long center = static_cast<long long>(h.size() - 1) / 2;
  const long long taps = static_cast<long long>(h.size());

  auto finish_row = [](Row& row) {
    row.contiguous = true;
    for (std::size_t j = 1; j < row.index.size(); ++j) {
      if (row.index[j] != row.index[0] + j) {
        row.contiguous = false;
        break;
      }
    }
  };

  if (direction == ResampleDirection::kHalve) {
    if (input_length % 2 != 0) {
      throw SizeError("resample: halve needs an even axis length, got " +
                      std::to_string(input_length));
    }
    rows_.resize(input_length / 2);
    for (std::size_t m = 0; m < rows_.size(); ++m) {
      Row& row = rows_[m];
      for (long long k = 0; k < taps; ++k) {
        const long long pos = 2 * static_cast<long long>(m) + k - center;
        row.index.push_back(ReflectIndex(pos, input_length));
        row.weight.push_back(h[k]);
      }
      finish_row(row);
    }
  } else {
    // Zero-stuff to 2n samples, then filter with gain 2. Only the even
    // (sample-carrying) positions of the stuffed sequence contribute.
    const std::size_t up_length = 2 * input_length;
    rows_.resize(up_length);
    for (std::size_t i = 0; i < up_length; ++i) {
      Row& row = rows_[i];
      for (long long k = 0; k < taps; ++k) {
        const long long pos = static_cast<long long>(i) + k - center;
        const std::size_t stuffed = ReflectIndex(pos, up_length);
        if (stuffed % 2 != 0) continue;
        row.index.push_back(stuffed / 2);
        row.weight.push_back(2.0 * h[k]);
      }
      finish_row(row);
    }
  }
  if (input_length > kMaxDenseLength) return;
  const std::size_t out_len = rows_.size();
  dense_.assign(out_len * input_length, 0.0);
  dense_t_.assign(out_len * input_length, 0.0);
  for (std::size_t r = 0; r < out_len; ++r) {
    for (std::size_t j = 0; j < rows_[r].index.size(); ++j) {
      const std::size_t c = rows_[r].index[j];
      dense_[r * input_length + c] += rows_[r].weight[j];
      dense_t_[c * out_len + r] += rows_[r].weight[j];
    }
  }
}

std::shared_ptr<const AxisResampler> AxisResampler::Get(
    ResampleDirection direction, std::size_t input_length) {
  static std::mutex mutex;
  static std::map<std::pair<int, std::size_t>,
                  std::shared_ptr<const AxisResampler>>
      cache;
  const auto key = std::make_pair(static_cast<int>(direction), input_length);
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto op = std::make_shared<const AxisResampler>(direction, input_length);
  cache.emplace(key, op);
  return op;
}

void AxisResampler::Apply(const double* in, double* out, std::size_t outer,
                          std::size_t inner) const {
  const std::size_t out_len = rows_.size();
  for (std::size_t o = 0; o < outer; ++o) {
    const double* src = in + o * input_length_ * inner;
    double* dst = out + o * out_len * inner;
    if (inner == 1) {
      for (std::size_t r = 0; r < out_len; ++r) {
        const Row& row = rows_[r];
        // Short taps: a plain loop beats a dispatched kernel call here.
        if (row.contiguous) {
          dst[r] = ShortDot(row.weight.data(), src + row.index[0],
                            row.weight.size());
        } else {
          double acc = 0.0;
          for (std::size_t j = 0; j < row.index.size(); ++j) {
            acc += row.weight[j] * src[row.index[j]];
          }
          dst[r] = acc;
        }
      }
    } else if (!dense_.empty()) {
      std::vector<const double*> x(input_length_);
      std::vector<double*> y(out_len);
      for (std::size_t i = 0; i < input_length_; ++i) x[i] = src + i * inner;
      for (std::size_t r = 0; r < out_len; ++r) y[r] = dst + r * inner;
      std::fill(dst, dst + out_len * inner, 0.0);
      kernels::GemmRows(dense_.data(), input_length_, x.data(), y.data(),
                        out_len, input_length_, inner);
    } else {
      for (std::size_t r = 0; r < out_len; ++r) {
        const Row& row = rows_[r];
        double* line = dst + r * inner;
        std::fill(line, line + inner, 0.0);
        for (std::size_t j = 0; j < row.index.size(); ++j) {
          kernels::Axpy(row.weight[j], src + row.index[j] * inner, line, inner);
        }
      }
    }
  }
}

void AxisResampler::AccumulateTranspose(const double* grad_out,
                                        double* grad_in, std::size_t outer,
                                        std::size_t inner) const {
  const std::size_t out_len = rows_.size();
  for (std::size_t o = 0; o < outer; ++o) {
    const double* src = grad_out + o * out_len * inner;
    double* dst = grad_in + o * input_length_ * inner;
    if (inner > 1 && !dense_t_.empty()) {
      std::vector<const double*> x(out_len);
      std::vector<double*> y(input_length_);
      for (std::size_t r = 0; r < out_len; ++r) x[r] = src + r * inner;
      for (std::size_t i = 0; i < input_length_; ++i) y[i] = dst + i * inner;
      kernels::GemmRows(dense_t_.data(), out_len, x.data(), y.data(),
                        input_length_, out_len, inner);
      continue;
    }
    for (std::size_t r = 0; r < out_len; ++r) {
      const Row& row = rows_[r];
      if (inner == 1) {
        if (row.contiguous) {
          double* y = dst + row.index[0];
          const double g = src[r];
          for (std::size_t j = 0; j < row.weight.size(); ++j) {
            y[j] += row.weight[j] * g;
          }
        } else {
          for (std::size_t j = 0; j < row.index.size(); ++j) {
            dst[row.index[j]] += row.weight[j] * src[r];
          }
        }
      } else {
        for (std::size_t j = 0; j < row.index.size(); ++j) {
          kernels::Axpy(row.weight[j], src + r * inner,
                        dst + row.index[j] * inner, inner);
        }
      }
    }
  }
}

namespace {

std::vector<double> ResampleAlong(std::span<const double> data,
                                  const Shape& shape, std::size_t axis,
                                  ResampleDirection direction) {
  if (axis >= shape.size()) throw SizeError("resample: axis out of range");
  std::size_t outer = 1, inner = 1, total = 1;
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (d < axis) outer *= shape[d];
    if (d > axis) inner *= shape[d];
    total *= shape[d];
  }
  if (total != data.size()) throw SizeError("resample: shape/data mismatch");
  auto op = AxisResampler::Get(direction, shape[axis]);
  std::vector<double> out(outer * op->output_length() * inner);
  op->Apply(data.data(), out.data(), outer, inner);
  return out;
}

}  // namespace

std::vector<double> ResampleHalve(std::span<const double> data,
                                  const Shape& shape, std::size_t axis) {
  return ResampleAlong(data, shape, axis, ResampleDirection::kHalve);
}

std::vector<double> ResampleDouble(std::span<const double> data,
                                   const Shape& shape, std::size_t axis) {
  return ResampleAlong(data, shape, axis, ResampleDirection::kDouble);
}

}  // namespace mrcqt
