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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "mrcqt/error.h"
#include "mrcqt/ops.h"

namespace mrcqt {
namespace {

constexpr std::size_t kMaxGroups = 8;

std::size_t Groups(std::size_t channels) {
  return std::min(kMaxGroups, channels);
}

std::string Level(const char* side, int level) {
  return side + std::to_string(level);
}

// Axis moved along when the U-Net leaves octave `row` for the one below.
std::size_t TransitionAxis(const OctaveSpec& row) {
  return row.resampling == Resampling::kFreq ? 1 : 2;
}

}  // namespace

void NetConfig::Validate(const MultiResSpec& spec) const {
  const std::size_t levels = static_cast<std::size_t>(spec.num_octaves());
  if (channels.size() != levels) {
    throw ConfigError("net.channels: " + std::to_string(channels.size()) +
                      " entries for " + std::to_string(levels) + " levels");
  }
  if (dilated_convs.size() != levels) {
    throw ConfigError("net.dilated_convs: " +
                      std::to_string(dilated_convs.size()) + " entries for " +
                      std::to_string(levels) + " levels");
  }
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t c = channels[l];
    if (c == 0 || c % Groups(c) != 0) {
      throw ConfigError("net.channels: level " + std::to_string(l + 1) +
                        " has " + std::to_string(c) +
                        " channels, not divisible into " +
                        std::to_string(Groups(c)) + " norm groups");
    }
    if (l > 0 && c < channels[l - 1]) {
      throw ConfigError("net.channels: level " + std::to_string(l + 1) +
                        " decreases toward the bottleneck");
    }
    if (dilated_convs[l] == 0) {
      throw ConfigError("net.dilated_convs: level " + std::to_string(l + 1) +
                        " must have at least one dilated conv");
    }
  }
  if (embedding_dim == 0 || rff_features == 0) {
    throw ConfigError("net.embedding_dim and net.rff_features must be > 0");
  }
  if (!(rff_scale > 0.0)) throw ConfigError("net.rff_scale must be > 0");
  if (time_kernel % 2 == 0 || freq_kernel % 2 == 0) {
    throw ConfigError("net kernels must have odd length");
  }
}

NetConfig NetConfig::Paper() {
  NetConfig c;
  c.channels = {32, 32, 64, 64, 128, 128, 256, 256, 256};
  c.dilated_convs = {2, 2, 3, 3, 4, 4, 5, 5, 5};
  c.embedding_dim = 256;
  c.rff_features = 128;
  return c;
}

NetConfig NetConfig::Toy() {
  NetConfig c;
  c.channels = {8, 16, 32};
  c.dilated_convs = {2, 2, 2};
  c.embedding_dim = 32;
  c.rff_features = 16;
  return c;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : trainable) n += t.size();
  return n;
}

ModelParams ModelParams::Clone() const {
  ModelParams out;
  for (const auto& [name, t] : trainable) {
    Tensor copy = t.Detach();
    copy.set_requires_grad(t.requires_grad());
    out.trainable.emplace(name, copy);
  }
  for (const auto& [name, t] : buffers) out.buffers.emplace(name, t.Detach());
  return out;
}

const Tensor& ModelParams::at(const std::string& name) const {
  if (auto it = trainable.find(name); it != trainable.end()) return it->second;
  if (auto it = buffers.find(name); it != buffers.end()) return it->second;
  throw ConfigError("unknown parameter " + name);
}

MrCqtNet::MrCqtNet(MultiResSpec spec, NetConfig config,
                   std::size_t signal_length, uint64_t seed)
    : transform_(std::make_shared<const MultiResCqt>(std::move(spec),
                                                     signal_length)),
      config_(std::move(config)) {
  config_.Validate(this->spec());
  const int levels = num_levels();
  const FilterBank& bank = transform_->bank();

  // Walk the routing once to reject grids that cannot be resampled.
  std::size_t rows = 0;
  for (int l = 1; l <= levels; ++l) {
    const int octave = levels + 1 - l;
    rows += static_cast<std::size_t>(bank.octaves[octave - 1].bins);
    if (l < levels) {
      const OctaveSpec& row = this->spec().octave_table[octave - 1];
      const std::size_t frames = bank.octaves[octave - 1].frame_count;
      const std::size_t lower = bank.octaves[octave - 2].frame_count;
      if (row.resampling == Resampling::kFreq) {
        if (rows % 2 != 0 || frames != lower) {
          throw ConfigError("routing: level " + std::to_string(l) +
                            " cannot move to the next octave by frequency "
                            "downsampling");
        }
        rows /= 2;
      } else if (row.resampling == Resampling::kTime) {
        if (frames != 2 * lower) {
          throw ConfigError("routing: level " + std::to_string(l) +
                            " cannot move to the next octave by time "
                            "downsampling");
        }
      } else {
        throw ConfigError("routing: level " + std::to_string(l) +
                          " has no resampling to the next octave");
      }
    }
  }

  Rng rng(seed);
  init_rng_ = &rng;
  const std::size_t e = config_.embedding_dim;
  std::vector<double> freqs(config_.rff_features);
  for (double& f : freqs) f = config_.rff_scale * rng.Normal();
  const std::size_t num_freqs = freqs.size();
  params_.buffers.emplace("embed.rff",
                          Tensor::FromData({num_freqs}, std::move(freqs)));
  const std::size_t rff_dim = 2 * config_.rff_features;
  AddParam("embed.mlp0.w", {e, rff_dim}, std::sqrt(3.0 / rff_dim));
  AddZeros("embed.mlp0.b", {e});
  AddParam("embed.mlp1.w", {e, e}, std::sqrt(3.0 / e));
  AddZeros("embed.mlp1.b", {e});
  AddParam("embed.mlp2.w", {e, e}, std::sqrt(3.0 / e));
  AddZeros("embed.mlp2.b", {e});

  for (int l = 1; l <= levels; ++l) {
    const std::size_t c = config_.channels[l - 1];
    const std::size_t d = config_.dilated_convs[l - 1];
    const std::string enc = Level("enc", l), dec = Level("dec", l);
    BuildInBlock(enc + ".in", c);
    AddParam(enc + ".skip.w", {c, 2}, std::sqrt(3.0 / 2.0));
    BuildResBlock(enc + ".res", c, d);
    if (l < levels) {
      const std::size_t next = config_.channels[l];
      AddParam(enc + ".down.w", {next, c}, std::sqrt(3.0 / c));
    }
    // The bottleneck's encoder res block is shared with the decoder.
    if (l < levels) {
      AddParam(dec + ".merge.w", {c, 2 * c}, std::sqrt(3.0 / (2 * c)));
      AddZeros(dec + ".merge.b", {c});
      BuildResBlock(dec + ".res", c, d);
    }
    BuildOutBlock(dec + ".out", c);
    if (l > 1) {
      const std::size_t prev = config_.channels[l - 2];
      AddParam(dec + ".up.w", {prev, c}, std::sqrt(3.0 / c));
    }
  }
  // Residual low/high bands: one row each, time convolutions only.
  for (const char* band : {"edge.low", "edge.high"}) {
    const std::size_t c = config_.channels[0];
    BuildInBlock(std::string(band) + ".in", c);
    BuildResBlock(std::string(band) + ".res", c, 0);
    BuildOutBlock(std::string(band) + ".out", c);
  }
  init_rng_ = nullptr;
}

void MrCqtNet::AddParam(const std::string& name, Shape shape, double bound) {
  std::vector<double> v(ShapeSize(shape));
  for (double& x : v) x = init_rng_->Uniform(-bound, bound);
  params_.trainable.emplace(name,
                            Tensor::FromData(std::move(shape), std::move(v), true));
}

void MrCqtNet::AddZeros(const std::string& name, Shape shape) {
  params_.trainable.emplace(name, Tensor::Zeros(std::move(shape), true));
}

void MrCqtNet::AddOnes(const std::string& name, Shape shape) {
  params_.trainable.emplace(name, Tensor::Full(std::move(shape), 1.0, true));
}

void MrCqtNet::BuildInBlock(const std::string& prefix, std::size_t c) {
  const std::size_t e = config_.embedding_dim;
  AddParam(prefix + ".conv1.w", {c, 2}, std::sqrt(3.0 / 2.0));
  AddZeros(prefix + ".conv1.b", {c});
  AddOnes(prefix + ".norm.g", {c});
  AddParam(prefix + ".conv2.w", {c, c}, std::sqrt(3.0 / c));
  AddParam(prefix + ".film.w", {c, e}, std::sqrt(3.0 / e));
  AddZeros(prefix + ".film.b", {c});
}

void MrCqtNet::BuildResBlock(const std::string& prefix, std::size_t c,
                             std::size_t dilated) {
  const std::size_t e = config_.embedding_dim;
  const std::size_t kt = config_.time_kernel, kf = config_.freq_kernel;
  AddOnes(prefix + ".norm.g", {c});
  // The branch's last conv starts at zero so the block is the identity.
  if (dilated == 0) {
    AddZeros(prefix + ".time.w", {c, c, kt});
  } else {
    AddParam(prefix + ".time.w", {c, c, kt}, std::sqrt(3.0 / (c * kt)));
  }
  for (std::size_t i = 0; i < dilated; ++i) {
    const std::string name = prefix + ".freq" + std::to_string(i) + ".w";
    if (i + 1 == dilated) {
      AddZeros(name, {c, c, kf});
    } else {
      AddParam(name, {c, c, kf}, std::sqrt(3.0 / (c * kf)));
    }
  }
  AddParam(prefix + ".film.w", {c, e}, std::sqrt(3.0 / e));
  AddZeros(prefix + ".film.b", {c});
}

void MrCqtNet::BuildOutBlock(const std::string& prefix, std::size_t c) {
  const std::size_t e = config_.embedding_dim;
  AddParam(prefix + ".conv1.w", {c, c}, std::sqrt(3.0 / c));
  AddZeros(prefix + ".conv1.b", {c});
  AddOnes(prefix + ".norm.g", {c});
  AddParam(prefix + ".film.w", {c, e}, std::sqrt(3.0 / e));
  AddZeros(prefix + ".film.b", {c});
  AddZeros(prefix + ".conv2.w", {2, c});
  AddZeros(prefix + ".conv2.b", {2});
}

Tensor MrCqtNet::NoiseEmbed(double sigma) const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("noise_embed: sigma must be positive and finite, got " +
                         std::to_string(sigma));
  }
  const double c_noise = std::log(sigma) / 4.0;
  const Tensor& freqs = params_.at("embed.rff");
  const std::size_t f = freqs.size();
  std::vector<double> features(2 * f);
  for (std::size_t i = 0; i < f; ++i) {
    const double phase = 2.0 * std::numbers::pi * freqs.data()[i] * c_noise;
    features[i] = std::cos(phase);
    features[f + i] = std::sin(phase);
  }
  Tensor h = Tensor::FromData({2 * f}, std::move(features));
  h = Gelu(Linear(h, P("embed.mlp0.w"), P("embed.mlp0.b")));
  h = Gelu(Linear(h, P("embed.mlp1.w"), P("embed.mlp1.b")));
  return Linear(h, P("embed.mlp2.w"), P("embed.mlp2.b"));
}

Tensor MrCqtNet::Film(const std::string& prefix, const Tensor& x,
                      const Tensor& embed) const {
  return FilmScale(
      x, Linear(embed, P(prefix + ".film.w"), P(prefix + ".film.b")));
}

Tensor MrCqtNet::InBlock(const std::string& prefix, const Tensor& coeffs,
                         const Tensor& embed) const {
  if (coeffs.rank() != 3 || coeffs.dim(0) != 2) {
    throw SizeError(prefix + ": expected [2, bins, frames], got " +
                    ShapeToString(coeffs.shape()));
  }
  const std::size_t c = P(prefix + ".norm.g").size();
  Tensor h = Conv1x1(coeffs, P(prefix + ".conv1.w"), P(prefix + ".conv1.b"));
  h = Gelu(GroupNormShiftFree(h, Groups(c), P(prefix + ".norm.g")));
  h = Conv1x1(h, P(prefix + ".conv2.w"), Tensor());
  return Film(prefix, h, embed);
}

Tensor MrCqtNet::ResBlock(const std::string& prefix, const Tensor& latent,
                          const Tensor& embed) const {
  const Tensor& gain = P(prefix + ".norm.g");
  if (latent.rank() != 3 || latent.dim(0) != gain.size()) {
    throw SizeError(prefix + ": latent " + ShapeToString(latent.shape()) +
                    " does not have " + std::to_string(gain.size()) +
                    " channels");
  }
  Tensor h = Gelu(GroupNormShiftFree(latent, Groups(gain.size()), gain));
  h = ConvTime(h, P(prefix + ".time.w"));
  std::size_t dilation = 1;
  for (std::size_t i = 0;; ++i, dilation *= 2) {
    const std::string name = prefix + ".freq" + std::to_string(i) + ".w";
    if (!params_.trainable.count(name)) break;
    h = ConvFreqDilated(Gelu(h), P(name), dilation);
  }
  return Add(latent, Film(prefix, h, embed));
}

Tensor MrCqtNet::OutBlock(const std::string& prefix, const Tensor& latent,
                          const Tensor& embed) const {
  const std::size_t c = P(prefix + ".norm.g").size();
  Tensor h = Conv1x1(latent, P(prefix + ".conv1.w"), P(prefix + ".conv1.b"));
  h = Gelu(GroupNormShiftFree(h, Groups(c), P(prefix + ".norm.g")));
  h = Film(prefix, h, embed);
  return Conv1x1(h, P(prefix + ".conv2.w"), P(prefix + ".conv2.b"));
}

GridTensors MrCqtNet::UnetForward(const GridTensors& grids,
                                  double sigma) const {
  const int levels = num_levels();
  const FilterBank& bank = transform_->bank();
  const MultiResSpec& table = spec();
  if (grids.octaves.size() != static_cast<std::size_t>(levels)) {
    throw ConfigError("unet: " + std::to_string(grids.octaves.size()) +
                      " octave grids for " + std::to_string(levels) +
                      " levels");
  }
  for (int l = 1; l <= levels; ++l) {
    const int octave = levels + 1 - l;
    const OctaveLayout& o = bank.octaves[octave - 1];
    const Shape want{2, static_cast<std::size_t>(o.bins), o.frame_count};
    if (grids.octaves[octave - 1].shape() != want) {
      throw ConfigError("unet: level " + std::to_string(l) + " (octave " +
                        std::to_string(octave) + ") grid is " +
                        ShapeToString(grids.octaves[octave - 1].shape()) +
                        ", expected " + ShapeToString(want));
    }
  }
  const Shape low{2, 1, bank.lowpass.frame_count};
  const Shape high{2, 1, bank.highpass.frame_count};
  if (grids.lowpass.shape() != low || grids.highpass.shape() != high) {
    throw ConfigError("unet: residual band grids do not match the bank");
  }

  const Tensor embed = NoiseEmbed(sigma);

  // Encoder.
  std::vector<Tensor> skips;
  Tensor h, pyramid;
  for (int l = 1; l <= levels; ++l) {
    const int octave = levels + 1 - l;
    const std::string enc = Level("enc", l);
    const Tensor& grid = grids.octaves[octave - 1];
    const Tensor fed = InBlock(enc + ".in", grid, embed);
    h = l == 1 ? fed : Concat({fed, h}, 1);
    pyramid = l == 1 ? grid : Concat({grid, pyramid}, 1);
    h = Add(h, Conv1x1(pyramid, P(enc + ".skip.w"), Tensor()));
    h = ResBlock(enc + ".res", h, embed);
    skips.push_back(h);
    if (l < levels) {
      const std::size_t axis = TransitionAxis(table.octave_table[octave - 1]);
      h = Conv1x1(Downsample(h, axis), P(enc + ".down.w"), Tensor());
      pyramid = Downsample(pyramid, axis);
    }
  }

  // Decoder: each level peels off its octave through an out block.
  GridTensors out;
  out.octaves.resize(static_cast<std::size_t>(levels));
  for (int l = levels; l >= 1; --l) {
    const int octave = levels + 1 - l;
    const std::string dec = Level("dec", l);
    if (l < levels) {
      h = Conv1x1(Concat({h, skips[l - 1]}, 0), P(dec + ".merge.w"),
                  P(dec + ".merge.b"));
      h = ResBlock(dec + ".res", h, embed);
    }
    const std::size_t bins = static_cast<std::size_t>(bank.octaves[octave - 1].bins);
    if (l == 1) {
      out.octaves[octave - 1] = OutBlock(dec + ".out", h, embed);
      break;
    }
    std::vector<Tensor> parts = Split(h, 1, {bins, h.dim(1) - bins});
    out.octaves[octave - 1] = OutBlock(dec + ".out", parts[0], embed);
    // Undo the encoder's move from level l - 1 to level l.
    const std::size_t axis = TransitionAxis(table.octave_table[octave]);
    h = Conv1x1(Upsample(parts[1], axis), P(dec + ".up.w"), Tensor());
  }

  auto edge = [&](const std::string& prefix, const Tensor& grid) {
    Tensor x = InBlock(prefix + ".in", grid, embed);
    x = ResBlock(prefix + ".res", x, embed);
    return OutBlock(prefix + ".out", x, embed);
  };
  out.lowpass = edge("edge.low", grids.lowpass);
  out.highpass = edge("edge.high", grids.highpass);
  return out;
}

Tensor MrCqtNet::Forward(const Tensor& waveform, double sigma) const {
  const Tensor packed = CqtAnalysis(waveform, transform_);
  const GridTensors out =
      UnetForward(SplitGrids(packed, transform_->bank()), sigma);
  return CqtSynthesis(JoinGrids(out, transform_->bank()), transform_);
}

}  // namespace mrcqt
