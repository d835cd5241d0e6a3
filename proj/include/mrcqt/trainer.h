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


#ifndef MRCQT_TRAINER_H_
#define MRCQT_TRAINER_H_

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "mrcqt/checkpoint.h"
#include "mrcqt/config.h"
#include "mrcqt/dataset.h"
#include "mrcqt/net.h"
#include "mrcqt/optim.h"
#include "mrcqt/rng.h"

namespace mrcqt {

struct TrainStats {
  uint64_t iteration = 0;  // 1-based index of the finished step
  double loss = 0.0;
  double sigma_mean = 0.0;
  double grad_norm = 0.0;
};

// "iter loss sigma_mean grad_norm" with round-trip precision.
std::string FormatLogLine(const TrainStats& stats);

MrCqtNet BuildNet(const RunConfig& config);
// Copies the trainable values of `weights` into the net. Throws SizeError on
// a tree mismatch.
void LoadWeights(MrCqtNet& net, const ModelParams& weights);

// Denoising score matching with Adam and an EMA copy of the weights. Each
// step draws the batch segments, then per example (sigma, eps), from one
// seeded generator; each example's term is backpropagated separately.
class Trainer {
 public:
  Trainer(const RunConfig& config, SegmentSource data);

  const RunConfig& config() const { return config_; }
  const MrCqtNet& net() const { return net_; }
  const ModelParams& ema() const { return ema_; }
  uint64_t iteration() const { return iteration_; }

  // Throws NumericalError on a non-finite loss or gradient, leaving the
  // trainer in its pre-step state.
  TrainStats Step();

  Checkpoint Snapshot() const;
  // Throws SizeError when the checkpoint's tensors do not fit the net.
  void Restore(const Checkpoint& checkpoint);

 private:
  RunConfig config_;
  SegmentSource data_;
  MrCqtNet net_;
  ModelParams ema_;
  AdamState adam_;
  uint64_t iteration_ = 0;
  Rng rng_;
};

struct TrainRunOptions {
  uint64_t until = 0;                  // target iteration count
  std::string run_dir;                 // checkpoints go here; empty = none
  std::ostream* log = nullptr;         // loss log lines
  std::function<void(const TrainStats&)> on_step;
};

// Steps until `until`, writing ckpt_<iter>.ckpt at the configured cadence
// and latest.ckpt at the end. On a non-finite loss, writes
// nan_snapshot.ckpt (the pre-step state) and rethrows.
void RunTraining(Trainer& trainer, const TrainRunOptions& options);

// Heun samples from `weights` loaded into a net built from `config`.
std::vector<std::vector<double>> GenerateWaveforms(const RunConfig& config,
                                                   const ModelParams& weights,
                                                   std::size_t num_samples,
                                                   uint64_t seed);

}  // namespace mrcqt

#endif  // MRCQT_TRAINER_H_
