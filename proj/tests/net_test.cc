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


#include "mrcqt/net.h"

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mrcqt/error.h"
#include "mrcqt/gradcheck.h"
#include "mrcqt/ops.h"
#include "mrcqt/rng.h"

namespace mrcqt {
namespace {

constexpr std::size_t kToyLength = 16384;
constexpr std::size_t kPaperLength = 1u << 16;

Tensor RandomTensor(Shape shape, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<double> v(ShapeSize(shape));
  for (double& e : v) e = scale * rng.Normal();
  return Tensor::FromData(std::move(shape), std::move(v));
}

bool AllZero(const Tensor& t) {
  for (double v : t.data()) {
    if (v != 0.0) return false;
  }
  return true;
}

// Moves every parameter off its initial value so no branch is gated shut.
void Perturb(MrCqtNet& net, double scale, uint64_t seed) {
  Rng rng(seed);
  for (auto& [name, p] : net.mutable_params().trainable) {
    for (double& v : p.mutable_data()) v += scale * rng.Normal();
  }
}

MrCqtNet ToyNet(uint64_t seed = 1) {
  return MrCqtNet(MultiResSpec::Toy(), NetConfig::Toy(), kToyLength, seed);
}

GridTensors RandomGrids(const MrCqtNet& net, uint64_t seed) {
  const Tensor wave = RandomTensor({net.signal_length()}, seed);
  NoGradGuard no_grad;
  return SplitGrids(CqtAnalysis(wave, net.transform()), net.transform()->bank());
}

TEST(NoiseEmbedTest, DeterministicDistinctAndFinite) {
  const MrCqtNet net = ToyNet();
  const Tensor a = net.NoiseEmbed(0.3), b = net.NoiseEmbed(0.3);
  ASSERT_EQ(a.shape(), Shape{net.config().embedding_dim});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.data()[i], b.data()[i]);

  const Tensor lo = net.NoiseEmbed(1e-5), hi = net.NoiseEmbed(8.0);
  double dist = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    dist += (lo.data()[i] - hi.data()[i]) * (lo.data()[i] - hi.data()[i]);
  }
  EXPECT_GT(dist, 0.0);

  for (int k = 0; k <= 40; ++k) {
    const double sigma = 1e-5 * std::pow(8.0 / 1e-5, k / 40.0);
    const Tensor embed = net.NoiseEmbed(sigma);
    for (double v : embed.data()) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(NoiseEmbedTest, RejectsNonPositiveSigma) {
  const MrCqtNet net = ToyNet();
  EXPECT_THROW(net.NoiseEmbed(0.0), ParameterError);
  EXPECT_THROW(net.NoiseEmbed(-1.0), ParameterError);
}

TEST(NoiseEmbedTest, FrequenciesAreFrozenBuffers) {
  const MrCqtNet net = ToyNet();
  EXPECT_EQ(net.params().buffers.count("embed.rff"), 1u);
  EXPECT_EQ(net.params().trainable.count("embed.rff"), 0u);
}

TEST(InBlockTest, PaperTopOctaveShape) {
  const MrCqtNet net(MultiResSpec::Paper(), NetConfig::Paper(), kPaperLength, 1);
  const OctaveLayout& top = net.transform()->bank().octaves.back();
  ASSERT_EQ(top.bins, 32);
  NoGradGuard no_grad;
  const Tensor coeffs = RandomTensor({2, 32, top.frame_count}, 2);
  const Tensor out = net.InBlock("enc1.in", coeffs, net.NoiseEmbed(1.0));
  EXPECT_EQ(out.shape(), (Shape{32, 32, top.frame_count}));
}

TEST(InBlockTest, ZeroInputGivesZeroLatent) {
  const MrCqtNet net = ToyNet();
  NoGradGuard no_grad;
  const Tensor out = net.InBlock("enc1.in", Tensor::Zeros({2, 8, 2048}),
                                 net.NoiseEmbed(1.0));
  EXPECT_TRUE(AllZero(out));
}

TEST(InBlockTest, FilmGainIsActive) {
  const MrCqtNet net = ToyNet();
  NoGradGuard no_grad;
  const Tensor coeffs = RandomTensor({2, 8, 2048}, 3);
  const Tensor a = net.InBlock("enc1.in", coeffs, net.NoiseEmbed(0.01));
  const Tensor b = net.InBlock("enc1.in", coeffs, net.NoiseEmbed(5.0));
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a.data()[i] - b.data()[i]));
  }
  EXPECT_GT(diff, 1e-6);
}

TEST(ResBlockTest, IdentityAtInitialization) {
  const MrCqtNet net = ToyNet();
  NoGradGuard no_grad;
  const Tensor embed = net.NoiseEmbed(0.7);
  const std::vector<std::pair<std::string, Shape>> blocks = {
      {"enc1.res", {8, 8, 2048}},  {"enc2.res", {16, 16, 1024}},
      {"enc3.res", {32, 12, 1024}}, {"dec1.res", {8, 8, 2048}},
      {"dec2.res", {16, 16, 1024}}, {"edge.low.res", {8, 1, 1024}}};
  for (const auto& [prefix, shape] : blocks) {
    const Tensor x = RandomTensor(shape, 4);
    const Tensor y = net.ResBlock(prefix, x, embed);
    ASSERT_EQ(y.shape(), x.shape()) << prefix;
    for (std::size_t i = 0; i < x.size(); ++i) {
      ASSERT_EQ(y.data()[i], x.data()[i]) << prefix;
    }
  }
}

TEST(ResBlockTest, GradCheckWhenPerturbed) {
  MrCqtNet net(MultiResSpec::Toy(),
               NetConfig{{4, 8, 8}, {2, 2, 2}, 8, 4}, kToyLength, 5);
  Perturb(net, 0.1, 6);
  const Tensor x = RandomTensor({4, 6, 16}, 7);
  x.node()->requires_grad = true;
  const Tensor probe = RandomTensor({4, 6, 16}, 8);
  const auto& p = net.params();
  std::vector<Tensor> inputs = {x, p.at("enc1.res.time.w"),
                                p.at("enc1.res.freq0.w"),
                                p.at("enc1.res.freq1.w"),
                                p.at("enc1.res.norm.g"),
                                p.at("enc1.res.film.w")};
  const GradCheckReport report = GradCheck(
      [&] {
        return Sum(Mul(net.ResBlock("enc1.res", x, net.NoiseEmbed(0.5)), probe));
      },
      inputs);
  EXPECT_TRUE(report.passed) << report.Describe();
}

TEST(OutBlockTest, ZeroAtInitializationWithOctaveShape) {
  const MrCqtNet net = ToyNet();
  NoGradGuard no_grad;
  const Tensor out =
      net.OutBlock("dec2.out", RandomTensor({16, 8, 1024}, 9), net.NoiseEmbed(1.0));
  EXPECT_EQ(out.shape(), (Shape{2, 8, 1024}));
  EXPECT_TRUE(AllZero(out));
}

TEST(OutBlockTest, FinalConvIsLinear) {
  MrCqtNet net = ToyNet();
  Perturb(net, 0.1, 10);
  NoGradGuard no_grad;
  const Tensor& w = net.params().at("dec1.out.conv2.w");
  const Tensor a = RandomTensor({8, 8, 64}, 11), b = RandomTensor({8, 8, 64}, 12);
  const Tensor lhs = Conv1x1(Add(a, Scale(b, 2.5)), w, Tensor());
  const Tensor rhs = Add(Conv1x1(a, w, Tensor()), Scale(Conv1x1(b, w, Tensor()), 2.5));
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    EXPECT_NEAR(lhs.data()[i], rhs.data()[i], 1e-12);
  }
}

TEST(UnetTest, ToyIsZeroMapAtInitialization) {
  const MrCqtNet net = ToyNet();
  const GridTensors grids = RandomGrids(net, 13);
  NoGradGuard no_grad;
  const GridTensors out = net.UnetForward(grids, 0.5);
  ASSERT_EQ(out.octaves.size(), grids.octaves.size());
  for (std::size_t o = 0; o < out.octaves.size(); ++o) {
    EXPECT_EQ(out.octaves[o].shape(), grids.octaves[o].shape());
    EXPECT_TRUE(AllZero(out.octaves[o]));
  }
  EXPECT_TRUE(AllZero(out.lowpass));
  EXPECT_TRUE(AllZero(out.highpass));
}

TEST(UnetTest, PaperGridsKeepTableShapes) {
  const MrCqtNet net(MultiResSpec::Paper(), NetConfig::Paper(), kPaperLength, 1);
  const GridTensors grids = RandomGrids(net, 14);
  NoGradGuard no_grad;
  const GridTensors out = net.UnetForward(grids, 1.0);
  ASSERT_EQ(out.octaves.size(), 9u);
  const int bins[9] = {8, 8, 8, 16, 16, 16, 16, 32, 32};
  for (std::size_t o = 0; o < 9; ++o) {
    EXPECT_EQ(out.octaves[o].shape(), grids.octaves[o].shape());
    EXPECT_EQ(out.octaves[o].dim(1), static_cast<std::size_t>(bins[o]));
    EXPECT_TRUE(AllZero(out.octaves[o]));
  }
}

TEST(UnetTest, MismatchedGridNamesLevel) {
  const MrCqtNet net = ToyNet();
  GridTensors grids = RandomGrids(net, 15);
  grids.octaves[1] = Tensor::Zeros({2, 8, 512});
  try {
    net.UnetForward(grids, 1.0);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("level 2"), std::string::npos) << e.what();
  }
}

TEST(UnetTest, InvalidConfigNamesLevel) {
  NetConfig config = NetConfig::Toy();
  config.channels = {8, 12, 32};
  try {
    MrCqtNet(MultiResSpec::Toy(), config, kToyLength, 1);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("level 2"), std::string::npos) << e.what();
  }
  config = NetConfig::Toy();
  config.channels = {8, 16};
  EXPECT_THROW(MrCqtNet(MultiResSpec::Toy(), config, kToyLength, 1), ConfigError);
}

TEST(DenoiserTest, ZeroWaveformAtInitializationAndFinite) {
  const MrCqtNet net = ToyNet();
  const Tensor x = RandomTensor({kToyLength}, 16);
  NoGradGuard no_grad;
  for (double sigma : {1e-5, 1.0, 8.0}) {
    const Tensor y = net.Forward(x, sigma);
    ASSERT_EQ(y.shape(), x.shape());
    EXPECT_TRUE(AllZero(y)) << sigma;
  }
}

TEST(DenoiserTest, PerturbedOutputIsFinite) {
  MrCqtNet net = ToyNet();
  Perturb(net, 0.05, 17);
  const Tensor x = RandomTensor({kToyLength}, 18);
  NoGradGuard no_grad;
  for (double sigma : {1e-5, 1.0, 8.0}) {
    const Tensor y = net.Forward(x, sigma);
    double energy = 0.0;
    for (double v : y.data()) {
      ASSERT_TRUE(std::isfinite(v));
      energy += v * v;
    }
    EXPECT_GT(energy, 0.0);
  }
}

TEST(DenoiserTest, ParameterSubsetGradCheck) {
  MrCqtNet net = ToyNet();
  Perturb(net, 0.05, 19);
  const Tensor x = RandomTensor({kToyLength}, 20);
  const Tensor probe = RandomTensor({kToyLength}, 21);
  std::vector<Tensor> inputs;
  for (const auto& [name, p] : net.params().trainable) inputs.push_back(p);
  GradCheckOptions options;
  options.tol = 1e-3;
  options.sample_elements = 10;
  options.directions = 2;
  options.seed = 22;
  const GradCheckReport report = GradCheck(
      [&] { return Sum(Mul(net.Forward(x, 0.4), probe)); }, inputs, options);
  EXPECT_TRUE(report.passed) << report.Describe();
}

TEST(DenoiserTest, EndToEndInputGradCheck) {
  MrCqtNet net = ToyNet();
  Perturb(net, 0.05, 23);
  Tensor x = RandomTensor({kToyLength}, 24);
  x.set_requires_grad(true);
  const Tensor target = RandomTensor({kToyLength}, 25, 0.1);
  GradCheckOptions options;
  options.tol = 1e-3;
  options.sample_elements = 10;
  options.directions = 2;
  options.seed = 26;
  // Per-element gradients of the mean are ~1e-7; a larger step keeps
  // round-off in the differences below the tolerance on every ISA.
  options.eps = 1e-4;
  const GradCheckReport report = GradCheck(
      [&] { return Mse(net.Forward(x, 0.4), target); }, {x}, options);
  EXPECT_TRUE(report.passed) << report.Describe();
}

TEST(DenoiserTest, EveryParameterReceivesGradient) {
  MrCqtNet net = ToyNet();
  Perturb(net, 0.05, 27);
  const Tensor x = RandomTensor({kToyLength}, 28);
  const Tensor target = RandomTensor({kToyLength}, 29, 0.1);
  Backward(Mse(net.Forward(x, 0.4), target));
  for (const auto& [name, p] : net.params().trainable) {
    double norm = 0.0;
    for (double g : p.grad()) norm += g * g;
    EXPECT_GT(norm, 0.0) << name;
  }
}

TEST(DenoiserTest, DeterministicForSeed) {
  MrCqtNet a = ToyNet(30), b = ToyNet(30), c = ToyNet(31);
  EXPECT_EQ(a.params().parameter_count(), b.params().parameter_count());
  bool any_diff = false;
  for (const auto& [name, p] : a.params().trainable) {
    const Tensor& q = b.params().at(name);
    for (std::size_t i = 0; i < p.size(); ++i) ASSERT_EQ(p.data()[i], q.data()[i]);
    const Tensor& r = c.params().at(name);
    for (std::size_t i = 0; i < p.size(); ++i) any_diff |= p.data()[i] != r.data()[i];
  }
  EXPECT_TRUE(any_diff);
}

}  // namespace
}  // namespace mrcqt
