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


#ifndef MRCQT_CONFIG_H_
#define MRCQT_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "mrcqt/cqt.h"
#include "mrcqt/diffusion.h"
#include "mrcqt/eval.h"
#include "mrcqt/net.h"
#include "mrcqt/optim.h"
#include "mrcqt/wav.h"

// Run configuration: one YAML tree covering every tunable. Every key is
// optional and defaults to the paper-scale profile; unknown keys are
// rejected. See configs/paper.cfg for the documented full schema.
namespace mrcqt {

struct TransformConfig {
  MultiResSpec spec = MultiResSpec::Paper();
  // Segment length in samples; a power of two.
  std::size_t signal_length = 262144;
};

struct TrainerConfig {
  AdamConfig adam;
  std::size_t batch_size = 4;
  double ema_decay = 0.9999;
  std::size_t num_iterations = 500000;
  // Clip range is taken from the sampler schedule.
  SigmaSampling sigma_sampling;
  LambdaWeighting lambda_weighting = LambdaWeighting::kEdm;
  uint64_t seed = 0;
  // 0 disables periodic checkpoints (the final one is always written).
  std::size_t checkpoint_every = 100000;
};

struct GenerateConfig {
  NoiseScheduleConfig schedule;
  std::size_t num_samples = 512;
  uint64_t seed = 1;
  SampleFormat format = SampleFormat::kFloat32;
};

enum class DataSource { kDirectory, kSynthetic };

// Two-tone segments: f1, f2 log-uniform in [f_lo, f_hi], random phases and
// amplitudes in [0.5, 1], peak-normalized.
struct SyntheticConfig {
  std::size_t segments = 64;
  uint64_t seed = 7;
  double f_lo = 1100.0;
  double f_hi = 6500.0;
};

struct DataConfig {
  DataSource source = DataSource::kDirectory;
  std::string dir = "data/train";
  bool peak_normalize = true;
  SyntheticConfig synthetic;
};

struct RunConfig {
  TransformConfig transform;
  NetConfig net = NetConfig::Paper();
  uint64_t net_seed = 0;
  Preconditioner preconditioner{0.05};
  TrainerConfig trainer;
  GenerateConfig generate;
  ShrinkageConfig eval;
  DataConfig data;
  std::string run_dir = "runs/paper";
  // Source text, embedded verbatim in checkpoints.
  std::string text;
};

// Throws ConfigError naming the offending key (dotted path) for unknown keys,
// wrong types and out-of-domain values.
RunConfig ParseRunConfig(const std::string& text);
RunConfig LoadRunConfig(const std::string& path);

}  // namespace mrcqt

#endif  // MRCQT_CONFIG_H_
