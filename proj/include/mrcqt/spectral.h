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

#ifndef MRCQT_SPECTRAL_H_
#define MRCQT_SPECTRAL_H_

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

// FFT, window design and 2x anti-aliased resampling.
//
// FFT scaling convention, used everywhere in this project: the forward
// transform is unscaled, X[k] = sum_n x[n] exp(-2 pi i k n / N); the inverse
// divides by N. Parseval then reads sum |x|^2 = (1/N) sum |X|^2.
namespace mrcqt {

using Complex = std::complex<double>;
using Shape = std::vector<std::size_t>;

struct RealSignal {
  std::vector<double> samples;
  double sample_rate = 0.0;

  // Throws ParameterError on an empty or non-finite signal, or a
  // non-positive sample rate.
  void Validate() const;
};

using ComplexSpectrum = std::vector<Complex>;

bool IsPowerOfTwo(std::size_t n);
std::size_t NextPowerOfTwo(std::size_t n);

// Radix-2 plan with cached twiddles; plans are immutable and shared.
class FftPlan {
 public:
  explicit FftPlan(std::size_t size);

  // Returns a process-wide cached plan. Throws SizeError unless size is a
  // power of two.
  static std::shared_ptr<const FftPlan> Get(std::size_t size);

  std::size_t size() const { return size_; }

  // Unscaled in-place transform; sign -1 is the forward kernel.
  void Forward(std::span<Complex> data) const { Transform(data, false); }
  void InverseUnscaled(std::span<Complex> data) const { Transform(data, true); }

 private:
  void Transform(std::span<Complex> data, bool inverse) const;

  std::size_t size_;
  std::vector<std::size_t> bit_reverse_;
  std::vector<Complex> twiddles_;  // exp(-2 pi i k / N), k < N/2
};

ComplexSpectrum FftForward(std::span<const Complex> x);
ComplexSpectrum FftForward(std::span<const double> x);
std::vector<Complex> FftInverse(std::span<const Complex> spectrum);

enum class WindowShape { kHann };

struct WindowSpec {
  WindowShape shape = WindowShape::kHann;
  std::size_t length = 0;
};

// Periodic Hann: w[i] = 0.5 - 0.5 cos(2 pi i / L), so w[i] == w[L - i] and
// the peak value 1 sits at i = L / 2.
std::vector<double> MakeWindow(const WindowSpec& spec);

// Maps an out-of-range index onto [0, n) by mirror reflection about the end
// samples (the end samples themselves are not repeated).
std::size_t ReflectIndex(long long index, std::size_t n);

// Linear-phase lowpass shared by halve and double: 47-tap Kaiser (beta 8)
// windowed sinc, cutoff 0.1875 cycles/sample at the higher rate, with each
// polyphase branch normalized to 1/2 so DC passes exactly in both
// directions. Passband (<= 0.125) ripple ~1e-4; stopband (>= 0.25) < -80 dB.
const std::vector<double>& AntiAliasTaps();

enum class ResampleDirection { kHalve, kDouble };

// The 2x resampler along one axis as an explicit sparse linear operator
// (reflect boundary), so that forward and transpose share the same taps.
class AxisResampler {
 public:
  AxisResampler(ResampleDirection direction, std::size_t input_length);

  // Cached per (direction, length). Throws SizeError for odd lengths on halve
  // and zero lengths.
  static std::shared_ptr<const AxisResampler> Get(ResampleDirection direction,
                                                  std::size_t input_length);

  std::size_t input_length() const { return input_length_; }
  std::size_t output_length() const { return rows_.size(); }

  // Input viewed as [outer, input_length, inner]; out is overwritten with
  // [outer, output_length, inner].
  void Apply(const double* in, double* out, std::size_t outer,
             std::size_t inner) const;
  // grad_in += R^T grad_out with the same layout convention.
  void AccumulateTranspose(const double* grad_out, double* grad_in,
                           std::size_t outer, std::size_t inner) const;

 private:
  struct Row {
    std::vector<std::size_t> index;
    std::vector<double> weight;
    bool contiguous = false;  // index[j] == index[0] + j
  };

  std::size_t input_length_;
  std::vector<Row> rows_;
  // Dense [output, input] matrix and its transpose, used when each output
  // row is a vector (inner > 1) so the filter runs as a matrix product.
  std::vector<double> dense_, dense_t_;
};

// Tensor-level wrappers: data is row-major with the given shape.
std::vector<double> ResampleHalve(std::span<const double> data,
                                  const Shape& shape, std::size_t axis);
std::vector<double> ResampleDouble(std::span<const double> data,
                                   const Shape& shape, std::size_t axis);

}  // namespace mrcqt

#endif  // MRCQT_SPECTRAL_H_
