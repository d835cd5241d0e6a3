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

#include "mrcqt/cqt.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "mrcqt/error.h"

namespace mrcqt {
namespace {

constexpr double kDualNormFloor = 1e-6;

struct BandPlan {
  double lower = 0.0;
  double center = 0.0;
  double upper = 0.0;
  int octave = 0;  // zero-based, lowest first
};

double RisingHalf(double t) {
  const double s = std::sin(0.5 * std::numbers::pi * t);
  return s * s;
}

double FallingHalf(double t) {
  const double c = std::cos(0.5 * std::numbers::pi * t);
  return c * c;
}

double BandValue(const BandPlan& band, double f) {
  if (f <= band.lower || f >= band.upper) return 0.0;
  if (f <= band.center) {
    return RisingHalf((f - band.lower) / (band.center - band.lower));
  }
  return FallingHalf((f - band.center) / (band.upper - band.center));
}

// Collects the positive values of `value(f)` over bins 0 .. N/2 into a
// contiguous support.
template <typename ValueFn>
BandFilter SampleFilter(ValueFn value, double center_hz, std::size_t n,
                        double bin_hz) {
  BandFilter filter;
  filter.center_hz = center_hz;
  const std::size_t last_bin = n / 2;
  bool started = false;
  for (std::size_t bin = 0; bin <= last_bin; ++bin) {
    const double v = value(static_cast<double>(bin) * bin_hz);
    if (v > 0.0) {
      if (!started) {
        filter.first_bin = bin;
        started = true;
      }
      filter.values.push_back(v);
    } else if (started) {
      break;
    }
  }
  const double center_bin = std::round(center_hz / bin_hz);
  filter.center_bin = static_cast<std::size_t>(
      std::clamp(center_bin, 0.0, static_cast<double>(last_bin)));
  return filter;
}

// Smallest frame count that holds the support when circularly placed
// around the center bin.
std::size_t RequiredFrames(const BandFilter& filter) {
  if (filter.values.empty()) return 1;
  return filter.values.size();
}

FilterBank AssembleBank(const std::vector<BandPlan>& plans,
                        const std::vector<int>& octave_bins,
                        const std::vector<Resampling>& transitions,
                        std::size_t n, double sample_rate) {
  if (!IsPowerOfTwo(n)) {
    throw ParameterError("filterbank: signal length " + std::to_string(n) +
                         " is not a power of two");
  }
  const std::size_t num_octaves = octave_bins.size();
  if (n < (std::size_t{1} << num_octaves)) {
    throw ParameterError("filterbank: signal length " + std::to_string(n) +
                         " is shorter than 2^num_octaves");
  }
  const double bin_hz = sample_rate / static_cast<double>(n);

  FilterBank bank;
  bank.signal_length = n;
  bank.sample_rate = sample_rate;
  bank.bands.reserve(plans.size());
  for (const BandPlan& plan : plans) {
    bank.bands.push_back(SampleFilter(
        [&](double f) { return BandValue(plan, f); }, plan.center, n, bin_hz));
  }

  const BandPlan& first = plans.front();
  const BandPlan& last = plans.back();
  bank.lowpass = SampleFilter(
      [&](double f) {
        if (f <= first.lower) return 1.0;
        if (f >= first.center) return 0.0;
        return FallingHalf((f - first.lower) / (first.center - first.lower));
      },
      0.0, n, bin_hz);
  bank.highpass = SampleFilter(
      [&](double f) {
        if (f <= last.center) return 0.0;
        if (f >= last.upper) return 1.0;
        return RisingHalf((f - last.center) / (last.upper - last.center));
      },
      sample_rate / 2.0, n, bin_hz);
  bank.lowpass.frame_count = NextPowerOfTwo(RequiredFrames(bank.lowpass));
  bank.highpass.frame_count = NextPowerOfTwo(RequiredFrames(bank.highpass));

  // Frame counts: M(o-1) = M(o) / 2 across a time transition, M(o-1) = M(o)
  // across a frequency transition. Pick the smallest top-octave count that
  // satisfies every octave's widest band.
  std::vector<std::size_t> required(num_octaves, 1);
  for (std::size_t k = 0; k < plans.size(); ++k) {
    const std::size_t o = static_cast<std::size_t>(plans[k].octave);
    required[o] = std::max(required[o], RequiredFrames(bank.bands[k]));
  }
  std::vector<int> halvings(num_octaves, 0);  // relative to the top octave
  for (std::size_t o = num_octaves - 1; o-- > 0;) {
    halvings[o] =
        halvings[o + 1] + (transitions[o + 1] == Resampling::kTime ? 1 : 0);
  }
  std::size_t top_frames = 1;
  for (std::size_t o = 0; o < num_octaves; ++o) {
    std::size_t needed = NextPowerOfTwo(required[o]) << halvings[o];
    top_frames = std::max(top_frames, needed);
  }
  if (top_frames > n) {
    throw ParameterError(
        "filterbank: signal length " + std::to_string(n) +
        " is too short for the painless condition (needs " +
        std::to_string(top_frames) + " frames in the top octave)");
  }

  bank.octaves.resize(num_octaves);
  std::size_t band_index = 0;
  for (std::size_t o = 0; o < num_octaves; ++o) {
    OctaveLayout& layout = bank.octaves[o];
    layout.bins = octave_bins[o];
    layout.frame_count = top_frames >> halvings[o];
    layout.hop = n / layout.frame_count;
    layout.first_band = band_index;
    for (int r = 0; r < layout.bins; ++r) {
      bank.bands[band_index++].frame_count = layout.frame_count;
    }
  }

  bank.dual_norm.assign(bank.num_spectrum_bins(), 0.0);
  auto accumulate = [&](const BandFilter& filter) {
    for (std::size_t j = 0; j < filter.values.size(); ++j) {
      bank.dual_norm[filter.first_bin + j] += filter.values[j] * filter.values[j];
    }
  };
  for (const BandFilter& band : bank.bands) accumulate(band);
  accumulate(bank.lowpass);
  accumulate(bank.highpass);
  const double max_norm =
      *std::max_element(bank.dual_norm.begin(), bank.dual_norm.end());
  for (std::size_t bin = 0; bin < bank.dual_norm.size(); ++bin) {
    if (!(bank.dual_norm[bin] >= kDualNormFloor * max_norm)) {
      throw NumericalError("filterbank: coverage gap at bin " +
                           std::to_string(bin) + " (" +
                           std::to_string(static_cast<double>(bin) * bin_hz) +
                           " Hz)");
    }
  }
  return bank;
}

std::vector<BandPlan> PlanBands(const std::vector<CqtSpec>& specs) {
  std::vector<BandPlan> plans;
  int octave_offset = 0;
  for (const CqtSpec& spec : specs) {
    const std::vector<double> centers = CenterFrequencies(spec);
    for (std::size_t k = 0; k < centers.size(); ++k) {
      BandPlan plan;
      plan.center = centers[k];
      plan.octave = octave_offset + static_cast<int>(k) / spec.bins_per_octave;
      plans.push_back(plan);
    }
    octave_offset += spec.num_octaves;
  }
  const double b_first = specs.front().bins_per_octave;
  const double b_last = specs.back().bins_per_octave;
  for (std::size_t k = 0; k < plans.size(); ++k) {
    plans[k].lower = k > 0 ? plans[k - 1].center
                           : plans[k].center * std::exp2(-1.0 / b_first);
    plans[k].upper = k + 1 < plans.size()
                         ? plans[k + 1].center
                         : plans[k].center * std::exp2(1.0 / b_last);
  }
  return plans;
}

inline std::size_t Wrap(std::size_t bin, std::size_t center, std::size_t m) {
  // (bin - center) mod m for unsigned values.
  return (bin + m - (center % m)) % m;
}

inline double CoefficientScale(std::size_t n, std::size_t m) {
  return 1.0 / std::sqrt(static_cast<double>(n) * static_cast<double>(m));
}

void CheckLength(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw SizeError(std::string(what) + ": length " + std::to_string(got) +
                    " does not match bank length " + std::to_string(want));
  }
}

// Band analysis from the positive-frequency spectrum into `out`.
void AnalyzeBand(const BandFilter& band, const std::vector<Complex>& spectrum,
                 std::size_t n, std::span<Complex> out) {
  const std::size_t m = band.frame_count;
  std::fill(out.begin(), out.end(), Complex(0.0, 0.0));
  for (std::size_t j = 0; j < band.values.size(); ++j) {
    const std::size_t bin = band.first_bin + j;
    out[Wrap(bin, band.center_bin, m)] += spectrum[bin] * band.values[j];
  }
  FftPlan::Get(m)->InverseUnscaled(out);
  const double scale = CoefficientScale(n, m);
  for (Complex& v : out) v *= scale;
}

// Adds g * DFT(coeffs) * scale back onto the positive-frequency spectrum.
void SynthesizeBand(const BandFilter& band, std::span<const Complex> coeffs,
                    double scale, std::vector<Complex>& spectrum,
                    std::vector<Complex>& scratch) {
  const std::size_t m = band.frame_count;
  scratch.assign(coeffs.begin(), coeffs.end());
  FftPlan::Get(m)->Forward(scratch);
  for (std::size_t j = 0; j < band.values.size(); ++j) {
    const std::size_t bin = band.first_bin + j;
    spectrum[bin] +=
        scratch[Wrap(bin, band.center_bin, m)] * (band.values[j] * scale);
  }
}

// Scatters g * spectrum into a band buffer and applies IDFT * scale.
void ScatterBand(const BandFilter& band, const std::vector<Complex>& spectrum,
                 double scale, std::span<Complex> out) {
  const std::size_t m = band.frame_count;
  std::fill(out.begin(), out.end(), Complex(0.0, 0.0));
  for (std::size_t j = 0; j < band.values.size(); ++j) {
    const std::size_t bin = band.first_bin + j;
    out[Wrap(bin, band.center_bin, m)] += spectrum[bin] * band.values[j];
  }
  FftPlan::Get(m)->InverseUnscaled(out);
  for (Complex& v : out) v *= scale;
}

template <typename Fn>
void ForEachBand(const FilterBank& bank, OctaveGridCoefficients& coeffs,
                 Fn fn) {
  for (std::size_t o = 0; o < bank.octaves.size(); ++o) {
    const OctaveLayout& layout = bank.octaves[o];
    ComplexGrid& grid = coeffs.octaves[o];
    for (int r = 0; r < layout.bins; ++r) {
      fn(bank.bands[layout.first_band + r],
         std::span<Complex>(grid.data.data() + r * grid.cols, grid.cols));
    }
  }
  fn(bank.lowpass, std::span<Complex>(coeffs.lowpass));
  fn(bank.highpass, std::span<Complex>(coeffs.highpass));
}

template <typename Fn>
void ForEachBand(const FilterBank& bank, const OctaveGridCoefficients& coeffs,
                 Fn fn) {
  for (std::size_t o = 0; o < bank.octaves.size(); ++o) {
    const OctaveLayout& layout = bank.octaves[o];
    const ComplexGrid& grid = coeffs.octaves[o];
    for (int r = 0; r < layout.bins; ++r) {
      fn(bank.bands[layout.first_band + r],
         std::span<const Complex>(grid.data.data() + r * grid.cols,
                                  grid.cols));
    }
  }
  fn(bank.lowpass, std::span<const Complex>(coeffs.lowpass));
  fn(bank.highpass, std::span<const Complex>(coeffs.highpass));
}

}  // namespace

double CqtSpec::f_max() const {
  return f_min * std::exp2(static_cast<double>(num_octaves));
}

void CqtSpec::Validate() const {
  if (!(f_min > 0.0)) throw ParameterError("cqt spec: f_min must be > 0");
  if (!(sample_rate > 0.0)) {
    throw ParameterError("cqt spec: sample rate must be > 0");
  }
  if (num_octaves <= 0) {
    throw ParameterError("cqt spec: num_octaves must be positive");
  }
  if (bins_per_octave <= 0 ||
      !IsPowerOfTwo(static_cast<std::size_t>(bins_per_octave))) {
    throw ParameterError("cqt spec: bins_per_octave must be a power of two");
  }
  const double nyquist = sample_rate / 2.0;
  if (f_max() > nyquist * (1.0 + 1e-9)) {
    throw ParameterError("cqt spec: f_min * 2^num_octaves = " +
                         std::to_string(f_max()) + " Hz exceeds Nyquist " +
                         std::to_string(nyquist) + " Hz");
  }
}

std::vector<double> CenterFrequencies(const CqtSpec& spec) {
  spec.Validate();
  std::vector<double> centers(static_cast<std::size_t>(spec.num_bins()));
  for (std::size_t k = 0; k < centers.size(); ++k) {
    centers[k] = spec.f_min * std::exp2(static_cast<double>(k) /
                                        spec.bins_per_octave);
  }
  return centers;
}

std::string ResamplingName(Resampling r) {
  switch (r) {
    case Resampling::kTime:
      return "Time";
    case Resampling::kFreq:
      return "Freq";
    case Resampling::kNone:
      return "--";
  }
  return "?";
}

MultiResSpec MultiResSpec::FromSubSpecs(std::vector<CqtSpec> sub_specs) {
  if (sub_specs.empty()) throw ParameterError("multires: no sub-transforms");
  for (const CqtSpec& s : sub_specs) s.Validate();
  for (std::size_t i = 1; i < sub_specs.size(); ++i) {
    const CqtSpec& lo = sub_specs[i - 1];
    const CqtSpec& hi = sub_specs[i];
    if (lo.sample_rate != hi.sample_rate) {
      throw ParameterError("multires: sub-transforms disagree on sample rate");
    }
    if (std::abs(lo.f_max() - hi.f_min) > 1e-9 * hi.f_min) {
      throw ParameterError("multires: ranges do not abut at " +
                           std::to_string(hi.f_min) + " Hz (lower range ends at " +
                           std::to_string(lo.f_max()) + " Hz)");
    }
    if (hi.bins_per_octave != lo.bins_per_octave &&
        hi.bins_per_octave != 2 * lo.bins_per_octave) {
      throw ParameterError(
          "multires: bins per octave must stay equal or double at each "
          "upward crossover");
    }
  }
  MultiResSpec spec;
  spec.sub_specs = std::move(sub_specs);
  int total = 0;
  for (const CqtSpec& s : spec.sub_specs) total += s.num_octaves;
  for (const CqtSpec& s : spec.sub_specs) {
    for (int j = 0; j < s.num_octaves; ++j) {
      OctaveSpec row;
      row.octave_index = static_cast<int>(spec.octave_table.size()) + 1;
      row.f_lo = s.f_min * std::exp2(static_cast<double>(j));
      row.f_hi = 2.0 * row.f_lo;
      row.bins_per_octave = s.bins_per_octave;
      row.unet_level = total + 1 - row.octave_index;
      spec.octave_table.push_back(row);
    }
  }
  for (std::size_t o = 0; o < spec.octave_table.size(); ++o) {
    OctaveSpec& row = spec.octave_table[o];
    if (o == 0) {
      row.resampling = Resampling::kNone;
    } else {
      row.resampling =
          spec.octave_table[o - 1].bins_per_octave == row.bins_per_octave
              ? Resampling::kTime
              : Resampling::kFreq;
    }
  }
  return spec;
}

MultiResSpec MultiResSpec::Paper() {
  constexpr double kRate = 44100.0;
  const double f_min = kRate / 1024.0;  // 43.07 Hz, nine octaves below Nyquist
  return FromSubSpecs({
      {f_min, 8, 3, kRate},
      {f_min * 8.0, 16, 4, kRate},
      {f_min * 128.0, 32, 2, kRate},
  });
}

MultiResSpec MultiResSpec::Toy() {
  constexpr double kRate = 16384.0;
  return FromSubSpecs({
      {1024.0, 4, 1, kRate},
      {2048.0, 8, 2, kRate},
  });
}

double MultiResSpec::sample_rate() const {
  return sub_specs.empty() ? 0.0 : sub_specs.front().sample_rate;
}

FilterBank BuildFilterBank(const CqtSpec& spec, std::size_t signal_length) {
  spec.Validate();
  std::vector<BandPlan> plans = PlanBands({spec});
  std::vector<int> bins(static_cast<std::size_t>(spec.num_octaves),
                        spec.bins_per_octave);
  std::vector<Resampling> transitions(bins.size(), Resampling::kTime);
  transitions[0] = Resampling::kNone;
  return AssembleBank(plans, bins, transitions, signal_length,
                      spec.sample_rate);
}

FilterBank BuildMultiResBank(const MultiResSpec& spec,
                             std::size_t signal_length) {
  if (spec.sub_specs.empty()) throw ParameterError("multires: empty spec");
  std::vector<BandPlan> plans = PlanBands(spec.sub_specs);
  std::vector<int> bins;
  std::vector<Resampling> transitions;
  for (const OctaveSpec& row : spec.octave_table) {
    bins.push_back(row.bins_per_octave);
    transitions.push_back(row.resampling);
  }
  return AssembleBank(plans, bins, transitions, signal_length,
                      spec.sample_rate());
}

OctaveGridCoefficients OctaveGridCoefficients::ZerosLike(
    const FilterBank& bank) {
  OctaveGridCoefficients c;
  for (const OctaveLayout& layout : bank.octaves) {
    c.octaves.emplace_back(static_cast<std::size_t>(layout.bins),
                           layout.frame_count);
  }
  c.lowpass.assign(bank.lowpass.frame_count, Complex(0.0, 0.0));
  c.highpass.assign(bank.highpass.frame_count, Complex(0.0, 0.0));
  return c;
}

void OctaveGridCoefficients::CheckShape(const FilterBank& bank) const {
  if (octaves.size() != bank.octaves.size()) {
    throw SizeError("coefficients: " + std::to_string(octaves.size()) +
                    " octave grids, bank has " +
                    std::to_string(bank.octaves.size()));
  }
  for (std::size_t o = 0; o < octaves.size(); ++o) {
    const OctaveLayout& layout = bank.octaves[o];
    const ComplexGrid& g = octaves[o];
    if (g.rows != static_cast<std::size_t>(layout.bins) ||
        g.cols != layout.frame_count || g.data.size() != g.rows * g.cols) {
      throw SizeError("coefficients: octave " + std::to_string(o + 1) +
                      " grid is " + std::to_string(g.rows) + "x" +
                      std::to_string(g.cols) + ", expected " +
                      std::to_string(layout.bins) + "x" +
                      std::to_string(layout.frame_count));
    }
  }
  if (lowpass.size() != bank.lowpass.frame_count ||
      highpass.size() != bank.highpass.frame_count) {
    throw SizeError("coefficients: residual band length mismatch");
  }
}

OctaveGridCoefficients CqtForward(std::span<const double> signal,
                                  const FilterBank& bank) {
  CheckLength(signal.size(), bank.signal_length, "cqt forward");
  const std::size_t n = bank.signal_length;
  const std::vector<Complex> spectrum = FftForward(signal);
  OctaveGridCoefficients coeffs = OctaveGridCoefficients::ZerosLike(bank);
  ForEachBand(bank, coeffs, [&](const BandFilter& band, std::span<Complex> out) {
    AnalyzeBand(band, spectrum, n, out);
  });
  return coeffs;
}

OctaveGridCoefficients CqtForward(const RealSignal& signal,
                                  const FilterBank& bank) {
  signal.Validate();
  return CqtForward(std::span<const double>(signal.samples), bank);
}

std::vector<double> CqtInverse(const OctaveGridCoefficients& coeffs,
                               const FilterBank& bank) {
  coeffs.CheckShape(bank);
  const std::size_t n = bank.signal_length;
  std::vector<Complex> half(bank.num_spectrum_bins(), Complex(0.0, 0.0));
  std::vector<Complex> scratch;
  ForEachBand(bank, coeffs,
              [&](const BandFilter& band, std::span<const Complex> c) {
                const std::size_t m = band.frame_count;
                const double scale =
                    1.0 / (CoefficientScale(n, m) * static_cast<double>(m));
                SynthesizeBand(band, c, scale, half, scratch);
              });
  for (std::size_t bin = 0; bin < half.size(); ++bin) {
    half[bin] /= bank.dual_norm[bin];
  }
  // Hermitian extension; DC and Nyquist use their real parts only.
  std::vector<Complex> full(n);
  full[0] = Complex(half[0].real(), 0.0);
  full[n / 2] = Complex(half[n / 2].real(), 0.0);
  for (std::size_t bin = 1; bin < n / 2; ++bin) {
    full[bin] = half[bin];
    full[n - bin] = std::conj(half[bin]);
  }
  FftPlan::Get(n)->InverseUnscaled(full);
  std::vector<double> out(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = full[i].real() * inv_n;
  return out;
}

std::vector<double> CqtForwardAdjoint(const OctaveGridCoefficients& cotangent,
                                      const FilterBank& bank) {
  cotangent.CheckShape(bank);
  const std::size_t n = bank.signal_length;
  std::vector<Complex> half(bank.num_spectrum_bins(), Complex(0.0, 0.0));
  std::vector<Complex> scratch;
  ForEachBand(bank, cotangent,
              [&](const BandFilter& band, std::span<const Complex> c) {
                SynthesizeBand(band, c, CoefficientScale(n, band.frame_count),
                               half, scratch);
              });
  std::vector<Complex> full(n, Complex(0.0, 0.0));
  std::copy(half.begin(), half.end(), full.begin());
  FftPlan::Get(n)->InverseUnscaled(full);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = full[i].real();
  return out;
}

OctaveGridCoefficients CqtInverseAdjoint(std::span<const double> cotangent,
                                         const FilterBank& bank) {
  CheckLength(cotangent.size(), bank.signal_length, "cqt inverse adjoint");
  const std::size_t n = bank.signal_length;
  const std::vector<Complex> spectrum_full = FftForward(cotangent);
  std::vector<Complex> half(bank.num_spectrum_bins());
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t bin = 0; bin < half.size(); ++bin) {
    const double weight = (bin == 0 || bin == n / 2) ? inv_n : 2.0 * inv_n;
    half[bin] = spectrum_full[bin] * (weight / bank.dual_norm[bin]);
  }
  OctaveGridCoefficients coeffs = OctaveGridCoefficients::ZerosLike(bank);
  ForEachBand(bank, coeffs, [&](const BandFilter& band, std::span<Complex> out) {
    const std::size_t m = band.frame_count;
    ScatterBand(band, half,
                1.0 / (CoefficientScale(n, m) * static_cast<double>(m)), out);
  });
  return coeffs;
}

CoefficientLayout::CoefficientLayout(const FilterBank& bank) {
  std::size_t offset = 0;
  for (const OctaveLayout& layout : bank.octaves) {
    octave_offsets.push_back(offset);
    offset += 2 * static_cast<std::size_t>(layout.bins) * layout.frame_count;
  }
  lowpass_offset = offset;
  offset += 2 * bank.lowpass.frame_count;
  highpass_offset = offset;
  offset += 2 * bank.highpass.frame_count;
  total = offset;
}

std::vector<double> PackCoefficients(const OctaveGridCoefficients& coeffs,
                                     const FilterBank& bank) {
  coeffs.CheckShape(bank);
  const CoefficientLayout layout(bank);
  std::vector<double> packed(layout.total);
  auto pack = [&](std::span<const Complex> values, std::size_t offset) {
    const std::size_t count = values.size();
    for (std::size_t i = 0; i < count; ++i) {
      packed[offset + i] = values[i].real();
      packed[offset + count + i] = values[i].imag();
    }
  };
  for (std::size_t o = 0; o < coeffs.octaves.size(); ++o) {
    pack(coeffs.octaves[o].data, layout.octave_offsets[o]);
  }
  pack(coeffs.lowpass, layout.lowpass_offset);
  pack(coeffs.highpass, layout.highpass_offset);
  return packed;
}

OctaveGridCoefficients UnpackCoefficients(std::span<const double> packed,
                                          const FilterBank& bank) {
  const CoefficientLayout layout(bank);
  CheckLength(packed.size(), layout.total, "unpack coefficients");
  OctaveGridCoefficients coeffs = OctaveGridCoefficients::ZerosLike(bank);
  auto unpack = [&](std::span<Complex> values, std::size_t offset) {
    const std::size_t count = values.size();
    for (std::size_t i = 0; i < count; ++i) {
      values[i] = Complex(packed[offset + i], packed[offset + count + i]);
    }
  };
  for (std::size_t o = 0; o < coeffs.octaves.size(); ++o) {
    unpack(coeffs.octaves[o].data, layout.octave_offsets[o]);
  }
  unpack(coeffs.lowpass, layout.lowpass_offset);
  unpack(coeffs.highpass, layout.highpass_offset);
  return coeffs;
}

MultiResCqt::MultiResCqt(MultiResSpec spec, std::size_t signal_length)
    : spec_(std::move(spec)), bank_(BuildMultiResBank(spec_, signal_length)) {}

OctaveGridCoefficients MrForward(const RealSignal& signal,
                                 const MultiResSpec& spec) {
  signal.Validate();
  if (signal.sample_rate != spec.sample_rate()) {
    throw ParameterError("mr forward: signal sample rate does not match spec");
  }
  const FilterBank bank = BuildMultiResBank(spec, signal.samples.size());
  return CqtForward(std::span<const double>(signal.samples), bank);
}

RealSignal MrInverse(const OctaveGridCoefficients& coeffs,
                     const MultiResSpec& spec, std::size_t signal_length) {
  const FilterBank bank = BuildMultiResBank(spec, signal_length);
  return RealSignal{CqtInverse(coeffs, bank), spec.sample_rate()};
}

double RelativeErrorDb(std::span<const double> reference,
                       std::span<const double> estimate) {
  CheckLength(estimate.size(), reference.size(), "relative error");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - estimate[i];
    num += d * d;
    den += reference[i] * reference[i];
  }
  if (den == 0.0) return num == 0.0 ? -std::numeric_limits<double>::infinity()
                                    : std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

}  // namespace mrcqt
