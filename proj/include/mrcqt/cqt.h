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

#ifndef MRCQT_CQT_H_
#define MRCQT_CQT_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mrcqt/spectral.h"

// Invertible constant-Q filterbank on octave-based regular grids.
//
// Each band k is a real frequency-domain window g_k over the positive
// frequencies: a rising half-Hann from the previous band's center to f_k and
// a falling half-Hann from f_k to the next center, so consecutive windows sum
// to one. A residual lowpass (below the first center) and highpass (above the
// last center, up to Nyquist) complete the cover of [0, fs/2]. All bands of
// one octave share a frame count M (a power of two no smaller than any band
// support in the octave), which makes the system painless: the frame
// operator is diagonal in frequency and inversion is a pointwise division by
// dual_norm = sum_k g_k^2.
//
// Coefficient scaling: c_k = (1 / sqrt(N M)) * IDFT_M(placed band spectrum),
// where the band spectrum is circularly centered on the band's center bin.
namespace mrcqt {

struct CqtSpec {
  double f_min = 0.0;  // lowest center frequency, Hz
  int bins_per_octave = 0;
  int num_octaves = 0;
  double sample_rate = 0.0;

  int num_bins() const { return bins_per_octave * num_octaves; }
  double f_max() const;  // f_min * 2^num_octaves, the range's upper edge
  // Throws ParameterError.
  void Validate() const;
};

// f_k = f_min * 2^(k / b) for k = 0 .. K-1.
std::vector<double> CenterFrequencies(const CqtSpec& spec);

enum class Resampling { kTime, kFreq, kNone };
std::string ResamplingName(Resampling r);

struct OctaveSpec {
  int octave_index = 0;  // 1 = lowest
  double f_lo = 0.0;
  double f_hi = 0.0;
  int bins_per_octave = 0;
  int unet_level = 0;  // 1 = highest octave, fed first
  // How the U-Net moves from this octave's level to the next lower octave's.
  Resampling resampling = Resampling::kNone;
};

struct MultiResSpec {
  std::vector<CqtSpec> sub_specs;  // lowest range first
  std::vector<OctaveSpec> octave_table;  // index o-1 holds octave o

  // Validates the sub-specs (abutting ranges, shared sample rate, b equal or
  // doubling at each upward crossover) and derives the octave table.
  static MultiResSpec FromSubSpecs(std::vector<CqtSpec> sub_specs);
  // Three transforms at 44.1 kHz: b = 8 / 16 / 32 over 43.1-344.5 Hz,
  // 344.5-5512.5 Hz and 5512.5-22050 Hz (nine octaves).
  static MultiResSpec Paper();
  // Desk-scale profile: 16384 Hz, b = 4 for 1024-2048 Hz, b = 8 up to 8192.
  static MultiResSpec Toy();

  int num_octaves() const { return static_cast<int>(octave_table.size()); }
  double sample_rate() const;
};

struct BandFilter {
  double center_hz = 0.0;
  std::size_t first_bin = 0;   // support is [first_bin, first_bin + size)
  std::vector<double> values;  // g over the support, all > 0
  std::size_t center_bin = 0;  // placement origin for the coefficient FFT
  std::size_t frame_count = 0;
};

struct OctaveLayout {
  int bins = 0;
  std::size_t frame_count = 0;
  std::size_t hop = 0;  // signal_length / frame_count
  std::size_t first_band = 0;  // index into FilterBank::bands
};

struct FilterBank {
  std::size_t signal_length = 0;
  double sample_rate = 0.0;
  std::vector<BandFilter> bands;  // ascending frequency, octave by octave
  std::vector<OctaveLayout> octaves;  // lowest octave first
  BandFilter lowpass;
  BandFilter highpass;
  std::vector<double> dual_norm;  // sum of g^2 per bin, bins 0 .. N/2

  std::size_t num_spectrum_bins() const { return signal_length / 2 + 1; }
};

// Builds a standalone bank (with its own residual bands) for one spec.
// `signal_length` must be a power of two and a multiple of 2^num_octaves.
// Throws ParameterError / NumericalError (coverage failure).
FilterBank BuildFilterBank(const CqtSpec& spec, std::size_t signal_length);
// Builds the merged bank of all sub-transforms with one shared dual norm and
// the frame pattern implied by the octave table.
FilterBank BuildMultiResBank(const MultiResSpec& spec,
                             std::size_t signal_length);

struct ComplexGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Complex> data;  // row-major

  ComplexGrid() = default;
  ComplexGrid(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}
  Complex& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const Complex& at(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
};

struct OctaveGridCoefficients {
  std::vector<ComplexGrid> octaves;  // octave o at index o-1: bins x frames
  std::vector<Complex> lowpass;
  std::vector<Complex> highpass;

  // Zero coefficients shaped for `bank`.
  static OctaveGridCoefficients ZerosLike(const FilterBank& bank);
  // Throws SizeError when shapes do not match `bank`.
  void CheckShape(const FilterBank& bank) const;
};

OctaveGridCoefficients CqtForward(std::span<const double> signal,
                                  const FilterBank& bank);
OctaveGridCoefficients CqtForward(const RealSignal& signal,
                                  const FilterBank& bank);
std::vector<double> CqtInverse(const OctaveGridCoefficients& coeffs,
                               const FilterBank& bank);
// Exact adjoints (complex values treated as paired real channels).
std::vector<double> CqtForwardAdjoint(const OctaveGridCoefficients& cotangent,
                                      const FilterBank& bank);
OctaveGridCoefficients CqtInverseAdjoint(std::span<const double> cotangent,
                                         const FilterBank& bank);

// Packs coefficients as real numbers: per octave a [2, bins, frames] block
// (real plane, then imaginary plane), then [2, M] for the lowpass and the
// highpass residuals.
struct CoefficientLayout {
  std::vector<std::size_t> octave_offsets;
  std::size_t lowpass_offset = 0;
  std::size_t highpass_offset = 0;
  std::size_t total = 0;

  explicit CoefficientLayout(const FilterBank& bank);
};
std::vector<double> PackCoefficients(const OctaveGridCoefficients& coeffs,
                                     const FilterBank& bank);
OctaveGridCoefficients UnpackCoefficients(std::span<const double> packed,
                                          const FilterBank& bank);

// The multi-resolution transform with its bank built once.
class MultiResCqt {
 public:
  MultiResCqt(MultiResSpec spec, std::size_t signal_length);

  const MultiResSpec& spec() const { return spec_; }
  const FilterBank& bank() const { return bank_; }
  std::size_t signal_length() const { return bank_.signal_length; }

  OctaveGridCoefficients Forward(std::span<const double> signal) const {
    return CqtForward(signal, bank_);
  }
  std::vector<double> Inverse(const OctaveGridCoefficients& coeffs) const {
    return CqtInverse(coeffs, bank_);
  }
  std::vector<double> ForwardVjp(
      const OctaveGridCoefficients& cotangent) const {
    return CqtForwardAdjoint(cotangent, bank_);
  }
  OctaveGridCoefficients InverseVjp(std::span<const double> cotangent) const {
    return CqtInverseAdjoint(cotangent, bank_);
  }

 private:
  MultiResSpec spec_;
  FilterBank bank_;
};

OctaveGridCoefficients MrForward(const RealSignal& signal,
                                 const MultiResSpec& spec);
RealSignal MrInverse(const OctaveGridCoefficients& coeffs,
                     const MultiResSpec& spec, std::size_t signal_length);

// Relative reconstruction error ||x - y|| / ||x|| in dB.
double RelativeErrorDb(std::span<const double> reference,
                       std::span<const double> estimate);

}  // namespace mrcqt

#endif  // MRCQT_CQT_H_
