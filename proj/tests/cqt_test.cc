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

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "mrcqt/cqt_ops.h"
#include "mrcqt/error.h"
#include "mrcqt/gradcheck.h"
#include "mrcqt/ops.h"
#include "mrcqt/rng.h"

namespace mrcqt {
namespace {

constexpr std::size_t kPaperLength = 1u << 16;
constexpr std::size_t kToyLength = 16384;

std::vector<double> Noise(std::size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& e : v) e = rng.Normal();
  return v;
}

std::vector<double> Tone(std::size_t n, double hz, double rate) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  }
  return v;
}

const MultiResCqt& PaperCqt() {
  static const MultiResCqt cqt(MultiResSpec::Paper(), kPaperLength);
  return cqt;
}

std::shared_ptr<const MultiResCqt> ToyCqt() {
  static const auto cqt =
      std::make_shared<const MultiResCqt>(MultiResSpec::Toy(), kToyLength);
  return cqt;
}

double PackedDot(const OctaveGridCoefficients& a,
                 const OctaveGridCoefficients& b, const FilterBank& bank) {
  const std::vector<double> pa = PackCoefficients(a, bank);
  const std::vector<double> pb = PackCoefficients(b, bank);
  long double s = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) s += pa[i] * pb[i];
  return static_cast<double>(s);
}

double Dot(std::span<const double> a, std::span<const double> b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return static_cast<double>(s);
}

OctaveGridCoefficients RandomCoefficients(const FilterBank& bank,
                                          uint64_t seed) {
  const CoefficientLayout layout(bank);
  return UnpackCoefficients(Noise(layout.total, seed), bank);
}

TEST(CenterFrequencyTest, Examples) {
  const auto low = CenterFrequencies({43.1, 8, 3, 44100.0});
  ASSERT_EQ(low.size(), 24u);
  EXPECT_DOUBLE_EQ(low[0], 43.1);
  EXPECT_NEAR(low[8], 86.2, 1e-12);
  const auto mid = CenterFrequencies({344.5, 16, 4, 44100.0});
  EXPECT_NEAR(mid[16], 689.0, 1e-12);
  EXPECT_NEAR(mid[16], 689.1, 0.11);  // the table's rounded octave edge
}

TEST(FilterBankTest, SingleSpecCoverageAndCount) {
  const FilterBank bank = BuildFilterBank({43.1, 8, 3, 44100.0}, 1u << 15);
  EXPECT_EQ(bank.bands.size(), 24u);
  for (double d : bank.dual_norm) EXPECT_GT(d, 0.0);
  for (std::size_t o = 0; o < bank.octaves.size(); ++o) {
    EXPECT_EQ(bank.octaves[o].frame_count * bank.octaves[o].hop,
              bank.signal_length);
    if (o > 0) {
      EXPECT_EQ(bank.octaves[o].frame_count,
                2 * bank.octaves[o - 1].frame_count);
    }
  }
}

TEST(FilterBankTest, RejectsInvalidSpecs) {
  EXPECT_THROW(BuildFilterBank({43.1, 8, 3, 44100.0}, 1000), ParameterError);
  EXPECT_THROW(BuildFilterBank({8000.0, 8, 3, 44100.0}, 1u << 15),
               ParameterError);
  EXPECT_THROW(BuildFilterBank({43.1, 0, 3, 44100.0}, 1u << 15),
               ParameterError);
}

TEST(FilterBankTest, PaperHopsFinerAtHighOctaves) {
  const FilterBank& bank = PaperCqt().bank();
  EXPECT_LT(bank.octaves[8].hop, bank.octaves[2].hop);
  for (double d : bank.dual_norm) EXPECT_GT(d, 0.0);
}

TEST(OctaveTableTest, PaperMatchesTableOne) {
  const MultiResSpec spec = MultiResSpec::Paper();
  ASSERT_EQ(spec.num_octaves(), 9);
  // Octave 1 .. 9.
  const int bins[] = {8, 8, 8, 16, 16, 16, 16, 32, 32};
  const int levels[] = {9, 8, 7, 6, 5, 4, 3, 2, 1};
  const Resampling resampling[] = {
      Resampling::kNone, Resampling::kTime, Resampling::kTime,
      Resampling::kFreq, Resampling::kTime, Resampling::kTime,
      Resampling::kTime, Resampling::kFreq, Resampling::kTime};
  const double lo[] = {43.1, 86.1, 172.3, 344.5, 689.1,
                       1378.1, 2756.3, 5512.5, 11025.0};
  for (int o = 0; o < 9; ++o) {
    const OctaveSpec& row = spec.octave_table[o];
    EXPECT_EQ(row.octave_index, o + 1);
    EXPECT_EQ(row.bins_per_octave, bins[o]);
    EXPECT_EQ(row.unet_level, levels[o]);
    EXPECT_EQ(row.resampling, resampling[o]) << "octave " << o + 1;
    EXPECT_NEAR(row.f_lo, lo[o], 0.06);
    EXPECT_DOUBLE_EQ(row.f_hi, 2.0 * row.f_lo);
  }
  EXPECT_DOUBLE_EQ(spec.octave_table[8].f_hi, 22050.0);
}

TEST(OctaveTableTest, PaperGridShapes) {
  const FilterBank& bank = PaperCqt().bank();
  const MultiResSpec& spec = PaperCqt().spec();
  const OctaveGridCoefficients c =
      PaperCqt().Forward(std::vector<double>(kPaperLength, 0.0));
  ASSERT_EQ(c.octaves.size(), 9u);
  for (int o = 0; o < 9; ++o) {
    EXPECT_EQ(c.octaves[o].rows,
              static_cast<std::size_t>(spec.octave_table[o].bins_per_octave));
    EXPECT_EQ(c.octaves[o].cols, bank.octaves[o].frame_count);
    for (const Complex& v : c.octaves[o].data) EXPECT_EQ(v, Complex(0.0, 0.0));
  }
  // The resampling column describes the move to the next lower octave.
  for (int o = 8; o >= 1; --o) {
    const auto& hi = c.octaves[o];
    const auto& lo = c.octaves[o - 1];
    if (spec.octave_table[o].resampling == Resampling::kTime) {
      EXPECT_EQ(lo.cols * 2, hi.cols) << o + 1;
      EXPECT_EQ(lo.rows, hi.rows);
    } else {
      EXPECT_EQ(lo.cols, hi.cols) << o + 1;
      EXPECT_EQ(lo.rows * 2, hi.rows);
    }
  }
}

TEST(OctaveTableTest, ToyShapes) {
  const MultiResSpec spec = MultiResSpec::Toy();
  ASSERT_EQ(spec.num_octaves(), 3);
  EXPECT_EQ(spec.octave_table[0].bins_per_octave, 4);
  EXPECT_EQ(spec.octave_table[1].resampling, Resampling::kFreq);
  EXPECT_EQ(spec.octave_table[2].resampling, Resampling::kTime);
  const FilterBank& bank = ToyCqt()->bank();
  EXPECT_EQ(bank.octaves[0].frame_count, bank.octaves[1].frame_count);
  EXPECT_EQ(2 * bank.octaves[1].frame_count, bank.octaves[2].frame_count);
}

TEST(CqtForwardTest, LinearAndScaled) {
  const FilterBank& bank = ToyCqt()->bank();
  const std::vector<double> x = Noise(kToyLength, 1), y = Noise(kToyLength, 2);
  std::vector<double> mix(kToyLength);
  for (std::size_t i = 0; i < kToyLength; ++i) mix[i] = 3.0 * x[i] - 0.5 * y[i];
  const auto px = PackCoefficients(CqtForward(x, bank), bank);
  const auto py = PackCoefficients(CqtForward(y, bank), bank);
  const auto pm = PackCoefficients(CqtForward(mix, bank), bank);
  for (std::size_t i = 0; i < pm.size(); ++i) {
    EXPECT_NEAR(pm[i], 3.0 * px[i] - 0.5 * py[i], 1e-11);
  }
  EXPECT_THROW(CqtForward(std::vector<double>(100, 0.0), bank), SizeError);
}

TEST(CqtForwardTest, ToneAtCenterPeaksInItsBand) {
  const FilterBank& bank = PaperCqt().bank();
  const double rate = bank.sample_rate;
  for (std::size_t k : {10u, 40u, 75u, 100u, 140u}) {
    const double hz = bank.bands[k].center_hz;
    const auto c = PaperCqt().Forward(Tone(kPaperLength, hz, rate));
    // Compare band energies (frame counts differ between octaves).
    std::size_t best = 0;
    double best_energy = -1.0;
    for (std::size_t o = 0; o < c.octaves.size(); ++o) {
      const auto& g = c.octaves[o];
      for (std::size_t r = 0; r < g.rows; ++r) {
        double e = 0.0;
        for (std::size_t t = 0; t < g.cols; ++t) e += std::norm(g.at(r, t));
        e /= static_cast<double>(g.cols);
        if (e > best_energy) {
          best_energy = e;
          best = bank.octaves[o].first_band + r;
        }
      }
    }
    EXPECT_EQ(best, k) << hz;
  }
}

TEST(CqtInverseTest, PaperRoundTrips) {
  const std::vector<double> noise = Noise(kPaperLength, 3);
  const auto back = PaperCqt().Inverse(PaperCqt().Forward(noise));
  EXPECT_LT(RelativeErrorDb(noise, back), -80.0);
  const std::vector<double> tone = Tone(kPaperLength, 440.0, 44100.0);
  EXPECT_LT(RelativeErrorDb(tone, PaperCqt().Inverse(PaperCqt().Forward(tone))),
            -80.0);
  const std::vector<double> zeros = PaperCqt().Inverse(
      OctaveGridCoefficients::ZerosLike(PaperCqt().bank()));
  for (double v : zeros) EXPECT_EQ(v, 0.0);
}

TEST(CqtInverseTest, FreeFunctionsRoundTrip) {
  const RealSignal x{Noise(kToyLength, 4), 16384.0};
  const MultiResSpec spec = MultiResSpec::Toy();
  const RealSignal y = MrInverse(MrForward(x, spec), spec, kToyLength);
  EXPECT_LT(RelativeErrorDb(x.samples, y.samples), -80.0);
}

TEST(CqtInverseTest, LinearInCoefficients) {
  const FilterBank& bank = ToyCqt()->bank();
  const auto a = RandomCoefficients(bank, 5), b = RandomCoefficients(bank, 6);
  const auto pa = PackCoefficients(a, bank), pb = PackCoefficients(b, bank);
  std::vector<double> pm(pa.size());
  for (std::size_t i = 0; i < pa.size(); ++i) pm[i] = 2.0 * pa[i] + pb[i];
  const auto ya = CqtInverse(a, bank), yb = CqtInverse(b, bank);
  const auto ym = CqtInverse(UnpackCoefficients(pm, bank), bank);
  for (std::size_t i = 0; i < ym.size(); ++i) {
    EXPECT_NEAR(ym[i], 2.0 * ya[i] + yb[i], 1e-12);
  }
}

TEST(CqtInverseTest, SingleCoefficientIsBandLocalized) {
  const FilterBank& bank = PaperCqt().bank();
  auto coeffs = OctaveGridCoefficients::ZerosLike(bank);
  const int octave = 5;  // 689 - 1378 Hz
  const std::size_t row = 7;
  auto& grid = coeffs.octaves[octave - 1];
  grid.at(row, grid.cols / 2) = Complex(1.0, 0.0);
  const std::vector<double> pulse = PaperCqt().Inverse(coeffs);
  const ComplexSpectrum spec = FftForward(pulse);
  std::size_t peak = 0;
  for (std::size_t k = 0; k <= kPaperLength / 2; ++k) {
    if (std::abs(spec[k]) > std::abs(spec[peak])) peak = k;
  }
  const BandFilter& band = bank.bands[bank.octaves[octave - 1].first_band + row];
  EXPECT_GE(peak, band.first_bin);
  EXPECT_LT(peak, band.first_bin + band.values.size());
  // Energy is concentrated around the frame's time position.
  double near = 0.0, total = 0.0;
  const std::size_t hop = bank.octaves[octave - 1].hop;
  const std::size_t center = (grid.cols / 2) * hop;
  for (std::size_t i = 0; i < pulse.size(); ++i) {
    total += pulse[i] * pulse[i];
    const std::size_t d = i > center ? i - center : center - i;
    if (d < 8 * hop) near += pulse[i] * pulse[i];
  }
  EXPECT_GT(near / total, 0.99);
}

TEST(CqtAdjointTest, InnerProductIdentityPaper) {
  const FilterBank& bank = PaperCqt().bank();
  const std::vector<double> x = Noise(kPaperLength, 7);
  const auto y = RandomCoefficients(bank, 8);
  const double lhs = PackedDot(PaperCqt().Forward(x), y, bank);
  const double rhs = Dot(x, PaperCqt().ForwardVjp(y));
  EXPECT_LT(std::abs(lhs - rhs) / std::abs(lhs), 1e-8);

  const auto c = RandomCoefficients(bank, 9);
  const std::vector<double> s = Noise(kPaperLength, 10);
  const double lhs2 = Dot(PaperCqt().Inverse(c), s);
  const double rhs2 = PackedDot(c, PaperCqt().InverseVjp(s), bank);
  EXPECT_LT(std::abs(lhs2 - rhs2) / std::abs(lhs2), 1e-8);
}

TEST(CqtAdjointTest, ZeroCotangentGivesZero) {
  const FilterBank& bank = ToyCqt()->bank();
  for (double v : ToyCqt()->ForwardVjp(OctaveGridCoefficients::ZerosLike(bank))) {
    EXPECT_EQ(v, 0.0);
  }
  const auto g = ToyCqt()->InverseVjp(std::vector<double>(kToyLength, 0.0));
  for (double v : PackCoefficients(g, bank)) EXPECT_EQ(v, 0.0);
}

TEST(CqtAdjointTest, TensorOpsMatchFiniteDifferences) {
  auto cqt = ToyCqt();
  const CoefficientLayout layout(cqt->bank());
  Tensor packed = Tensor::FromData({layout.total}, Noise(layout.total, 11), true);
  Tensor weights = Tensor::FromData({kToyLength}, Noise(kToyLength, 12));
  GradCheckOptions opt;
  opt.sample_elements = 40;
  opt.seed = 1;
  opt.eps = 1e-2;  // linear maps: no truncation error, less round-off
  const auto synth = GradCheck(
      [&] { return Sum(Mul(CqtSynthesis(packed, cqt), weights)); }, {packed},
      opt);
  EXPECT_TRUE(synth.passed) << synth.Describe();

  Tensor signal = Tensor::FromData({kToyLength}, Noise(kToyLength, 13), true);
  Tensor cw = Tensor::FromData({layout.total}, Noise(layout.total, 14));
  const auto analysis = GradCheck(
      [&] { return Sum(Mul(CqtAnalysis(signal, cqt), cw)); }, {signal}, opt);
  EXPECT_TRUE(analysis.passed) << analysis.Describe();
}

TEST(CqtGridTensorsTest, SplitJoinRoundTrip) {
  auto cqt = ToyCqt();
  const CoefficientLayout layout(cqt->bank());
  Tensor packed = Tensor::FromData({layout.total}, Noise(layout.total, 15));
  const GridTensors grids = SplitGrids(packed, cqt->bank());
  ASSERT_EQ(grids.octaves.size(), 3u);
  EXPECT_EQ(grids.octaves[0].shape(),
            (Shape{2, 4, cqt->bank().octaves[0].frame_count}));
  const Tensor joined = JoinGrids(grids, cqt->bank());
  for (std::size_t i = 0; i < packed.size(); ++i) {
    EXPECT_EQ(joined.data()[i], packed.data()[i]);
  }
}

// Tones one octave apart inside the b = 16 range land on the same row of
// adjacent octave grids.
TEST(PitchEquivarianceTest, OctaveShiftMovesOneGrid) {
  const FilterBank& bank = PaperCqt().bank();
  for (std::size_t row : {3u, 8u, 12u}) {
    const int octave = 5;
    const double hz = bank.bands[bank.octaves[octave - 1].first_band + row].center_hz;
    std::pair<int, std::size_t> found[2];
    for (int s = 0; s < 2; ++s) {
      const auto c = PaperCqt().Forward(Tone(kPaperLength, hz * (1 << s), 44100.0));
      double best = -1.0;
      for (int o = 0; o < 9; ++o) {
        const auto& g = c.octaves[o];
        for (std::size_t r = 0; r < g.rows; ++r) {
          for (std::size_t t = 0; t < g.cols; ++t) {
            if (std::abs(g.at(r, t)) > best) {
              best = std::abs(g.at(r, t));
              found[s] = {o + 1, r};
            }
          }
        }
      }
    }
    EXPECT_EQ(found[0].first, octave);
    EXPECT_EQ(found[1].first, octave + 1);
    EXPECT_EQ(found[0].second, row);
    EXPECT_EQ(found[1].second, row);
  }
}

}  // namespace
}  // namespace mrcqt
