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


#include "mrcqt/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <utility>

#include "mrcqt/diffusion.h"
#include "mrcqt/error.h"
#include "mrcqt/ops.h"

namespace mrcqt {

std::string FormatLogLine(const TrainStats& s) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%llu %.17g %.17g %.17g",
                static_cast<unsigned long long>(s.iteration), s.loss,
                s.sigma_mean, s.grad_norm);
  return buf;
}

MrCqtNet BuildNet(const RunConfig& config) {
  return MrCqtNet(config.transform.spec, config.net,
                  config.transform.signal_length, config.net_seed);
}

void LoadWeights(MrCqtNet& net, const ModelParams& weights) {
  ModelParams& params = net.mutable_params();
  CheckSameTree(params.trainable, weights.trainable, "weights");
  for (auto& [name, t] : params.trainable) {
    const std::span<const double> src = weights.trainable.at(name).data();
    std::copy(src.begin(), src.end(), t.mutable_data().begin());
  }
}

Trainer::Trainer(const RunConfig& config, SegmentSource data)
    : config_(config),
      data_(std::move(data)),
      net_(BuildNet(config)),
      ema_(net_.params().Clone()),
      rng_(config.trainer.seed) {
  if (data_.segment_length() != net_.signal_length()) {
    throw SizeError("train: segment length " +
                    std::to_string(data_.segment_length()) +
                    " differs from the transform length " +
                    std::to_string(net_.signal_length()));
  }
}

TrainStats Trainer::Step() {
  const TrainerConfig& tc = config_.trainer;
  const std::string rng_before = rng_.SaveState();
  ModelParams& params = net_.mutable_params();
  ZeroGrad(params);
  const std::vector<Tensor> batch = data_.NextBatch(tc.batch_size, rng_);
  const DenoiserFn f = [this](const Tensor& y, double sigma) {
    return net_.Forward(y, sigma);
  };
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  TrainStats stats;
  std::ostringstream sigmas;
  for (const Tensor& x0 : batch) {
    const DsmDraw draw = DrawDsmNoise(tc.sigma_sampling, x0.size(), rng_);
    const Tensor term = DsmTerm(f, config_.preconditioner, tc.lambda_weighting,
                                x0, draw.eps, draw.sigma);
    Backward(Scale(term, inv_batch));
    stats.loss += term.item() * inv_batch;
    stats.sigma_mean += draw.sigma * inv_batch;
    sigmas << (sigmas.tellp() > 0 ? ", " : "") << draw.sigma;
  }
  stats.grad_norm = GradNorm(params);
  if (!std::isfinite(stats.loss) || !std::isfinite(stats.grad_norm)) {
    ZeroGrad(params);
    rng_.LoadState(rng_before);
    std::ostringstream msg;
    msg << "train: non-finite loss at iteration " << iteration_ + 1
        << " (loss " << stats.loss << ", grad_norm " << stats.grad_norm
        << ", sigmas [" << sigmas.str() << "])";
    throw NumericalError(msg.str());
  }
  AdamStep(params, adam_, tc.adam);
  EmaUpdate(ema_, params, tc.ema_decay);
  ZeroGrad(params);
  stats.iteration = ++iteration_;
  return stats;
}

Checkpoint Trainer::Snapshot() const {
  Checkpoint c;
  c.config_text = config_.text;
  c.iteration = iteration_;
  c.rng_state = rng_.SaveState();
  c.params = net_.params();
  c.ema.trainable = ema_.trainable;
  c.adam = adam_;
  return c;
}

void Trainer::Restore(const Checkpoint& c) {
  ModelParams& params = net_.mutable_params();
  CheckSameTree(params.trainable, c.params.trainable, "checkpoint params");
  CheckSameTree(params.buffers, c.params.buffers, "checkpoint buffers");
  CheckSameTree(params.trainable, c.ema.trainable, "checkpoint ema");
  for (const auto* state : {&c.adam.m, &c.adam.v}) {
    if (state->empty()) continue;
    for (const auto& [name, t] : params.trainable) {
      const auto it = state->find(name);
      if (it == state->end() || it->second.size() != t.size()) {
        throw SizeError("checkpoint adam state: mismatch at '" + name + "'");
      }
    }
  }
  auto copy = [](const std::map<std::string, Tensor>& from,
                 std::map<std::string, Tensor>& to) {
    for (auto& [name, t] : to) {
      const std::span<const double> src = from.at(name).data();
      std::copy(src.begin(), src.end(), t.mutable_data().begin());
    }
  };
  copy(c.params.trainable, params.trainable);
  copy(c.params.buffers, params.buffers);
  copy(c.ema.trainable, ema_.trainable);
  copy(c.params.buffers, ema_.buffers);
  adam_ = c.adam;
  iteration_ = c.iteration;
  rng_.LoadState(c.rng_state);
}

void RunTraining(Trainer& trainer, const TrainRunOptions& options) {
  namespace fs = std::filesystem;
  if (!options.run_dir.empty()) fs::create_directories(options.run_dir);
  auto path = [&](const std::string& name) {
    return (fs::path(options.run_dir) / name).string();
  };
  const uint64_t every = trainer.config().trainer.checkpoint_every;
  while (trainer.iteration() < options.until) {
    TrainStats stats;
    try {
      stats = trainer.Step();
    } catch (const NumericalError& e) {
      if (options.run_dir.empty()) throw;
      const std::string snapshot = path("nan_snapshot.ckpt");
      SaveCheckpoint(snapshot, trainer.Snapshot());
      throw NumericalError(std::string(e.what()) + "; snapshot written to " +
                           snapshot);
    }
    if (options.log) *options.log << FormatLogLine(stats) << '\n' << std::flush;
    if (options.on_step) options.on_step(stats);
    if (!options.run_dir.empty() && every > 0 && stats.iteration % every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_%08llu.ckpt",
                    static_cast<unsigned long long>(stats.iteration));
      SaveCheckpoint(path(name), trainer.Snapshot());
    }
  }
  if (!options.run_dir.empty()) {
    SaveCheckpoint(path("latest.ckpt"), trainer.Snapshot());
  }
}

std::vector<std::vector<double>> GenerateWaveforms(const RunConfig& config,
                                                   const ModelParams& weights,
                                                   std::size_t num_samples,
                                                   uint64_t seed) {
  MrCqtNet net = BuildNet(config);
  LoadWeights(net, weights);
  const DenoiserFn f = [&net](const Tensor& y, double sigma) {
    return net.Forward(y, sigma);
  };
  Rng rng(seed);
  return HeunSample(MakeScoreFn(f, config.preconditioner),
                    config.generate.schedule, rng, num_samples,
                    net.signal_length());
}

}  // namespace mrcqt
