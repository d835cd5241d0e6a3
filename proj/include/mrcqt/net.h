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

#ifndef MRCQT_NET_H_
#define MRCQT_NET_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mrcqt/cqt.h"
#include "mrcqt/cqt_ops.h"
#include "mrcqt/rng.h"
#include "mrcqt/tensor.h"

namespace mrcqt {

struct NetConfig {
  // Per U-Net level, level 1 (highest octave) first.
  std::vector<std::size_t> channels;
  std::vector<std::size_t> dilated_convs;
  std::size_t embedding_dim = 64;
  std::size_t rff_features = 32;  // random frequencies; features are 2x this
  double rff_scale = 16.0;
  std::size_t time_kernel = 3;
  std::size_t freq_kernel = 3;

  // Throws ConfigError naming the offending field or level.
  void Validate(const MultiResSpec& spec) const;

  // 9 levels, 32 -> 256 channels, 2 -> 5 dilated convs.
  static NetConfig Paper();
  // 3 levels, channels {8, 16, 32}, 2 dilated convs per block.
  static NetConfig Toy();
};

// Named tensors in a deterministic (sorted) order.
struct ModelParams {
  std::map<std::string, Tensor> trainable;
  std::map<std::string, Tensor> buffers;  // frozen (RFF frequencies)

  std::size_t parameter_count() const;
  // Deep copy with fresh leaves.
  ModelParams Clone() const;
  const Tensor& at(const std::string& name) const;
};

// The octave-wise U-Net and the composed waveform denoiser F = ICQT o U o CQT.
// Level l of the U-Net takes octave N + 1 - l; latents are [C, rows, frames]
// with rows in ascending frequency.
class MrCqtNet {
 public:
  MrCqtNet(MultiResSpec spec, NetConfig config, std::size_t signal_length,
           uint64_t seed);

  const MultiResSpec& spec() const { return transform_->spec(); }
  const NetConfig& config() const { return config_; }
  const std::shared_ptr<const MultiResCqt>& transform() const {
    return transform_;
  }
  std::size_t signal_length() const { return transform_->signal_length(); }
  int num_levels() const { return spec().num_octaves(); }

  const ModelParams& params() const { return params_; }
  ModelParams& mutable_params() { return params_; }

  // Throws ParameterError unless sigma > 0.
  Tensor NoiseEmbed(double sigma) const;

  // Building blocks; `prefix` selects the parameter group (e.g. "enc2.res").
  Tensor InBlock(const std::string& prefix, const Tensor& coeffs,
                 const Tensor& embed) const;
  Tensor ResBlock(const std::string& prefix, const Tensor& latent,
                  const Tensor& embed) const;
  Tensor OutBlock(const std::string& prefix, const Tensor& latent,
                  const Tensor& embed) const;

  // Grid-domain network. Throws ConfigError naming the level on shape
  // mismatch.
  GridTensors UnetForward(const GridTensors& grids, double sigma) const;
  // Waveform [N] -> waveform [N].
  Tensor Forward(const Tensor& waveform, double sigma) const;

 private:
  void AddParam(const std::string& name, Shape shape, double bound);
  void AddZeros(const std::string& name, Shape shape);
  void AddOnes(const std::string& name, Shape shape);
  void BuildInBlock(const std::string& prefix, std::size_t channels);
  void BuildResBlock(const std::string& prefix, std::size_t channels,
                     std::size_t dilated);
  void BuildOutBlock(const std::string& prefix, std::size_t channels);
  const Tensor& P(const std::string& name) const { return params_.at(name); }
  Tensor Film(const std::string& prefix, const Tensor& x,
              const Tensor& embed) const;

  std::shared_ptr<const MultiResCqt> transform_;
  NetConfig config_;
  ModelParams params_;
  Rng* init_rng_ = nullptr;  // only during construction
};

}  // namespace mrcqt

#endif  // MRCQT_NET_H_
