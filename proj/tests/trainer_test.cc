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
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mrcqt/checkpoint.h"
#include "mrcqt/config.h"
#include "mrcqt/dataset.h"
#include "mrcqt/error.h"

namespace mrcqt {
namespace {

namespace fs = std::filesystem;

RunConfig ToyConfig() {
  return LoadRunConfig(MRCQT_SOURCE_DIR "/configs/toy.cfg");
}

Trainer ToyTrainer(const RunConfig& config) {
  return Trainer(config, LoadTrainingData(config, nullptr));
}

bool SameValues(const std::map<std::string, Tensor>& a,
                const std::map<std::string, Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, t] : a) {
    const auto x = t.data(), y = b.at(name).data();
    if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
  }
  return true;
}

bool SameStats(const TrainStats& a, const TrainStats& b) {
  return FormatLogLine(a) == FormatLogLine(b);
}

TEST(TrainerTest, LogLineFormat) {
  TrainStats s{12, 0.5, 0.25, 3.0};
  EXPECT_EQ(FormatLogLine(s), "12 0.5 0.25 3");
  s.loss = 0.1;
  EXPECT_EQ(std::stod(FormatLogLine(s).substr(3)), 0.1);
}

TEST(TrainerTest, SmokeLossDecreasesOverTwoHundredIterations) {
  const RunConfig config = ToyConfig();
  Trainer trainer = ToyTrainer(config);
  std::vector<double> losses;
  for (int i = 0; i < 200; ++i) losses.push_back(trainer.Step().loss);
  const double first =
      std::accumulate(losses.begin(), losses.begin() + 50, 0.0) / 50.0;
  const double last =
      std::accumulate(losses.end() - 50, losses.end(), 0.0) / 50.0;
  EXPECT_LT(last, first);
  EXPECT_EQ(trainer.iteration(), 200u);
}

TEST(TrainerTest, FixedSeedIsBitIdentical) {
  const RunConfig config = ToyConfig();
  Trainer a = ToyTrainer(config), b = ToyTrainer(config);
  for (int i = 0; i < 3; ++i) {
    const TrainStats sa = a.Step(), sb = b.Step();
    EXPECT_TRUE(SameStats(sa, sb)) << FormatLogLine(sa) << " vs "
                                   << FormatLogLine(sb);
  }
  EXPECT_TRUE(SameValues(a.net().params().trainable, b.net().params().trainable));
  EXPECT_EQ(EncodeCheckpoint(a.Snapshot()), EncodeCheckpoint(b.Snapshot()));
}

TEST(TrainerTest, EmaDiffersFromRawAfterUpdates) {
  const RunConfig config = ToyConfig();
  Trainer trainer = ToyTrainer(config);
  EXPECT_TRUE(SameValues(trainer.ema().trainable, trainer.net().params().trainable));
  trainer.Step();
  trainer.Step();
  EXPECT_FALSE(SameValues(trainer.ema().trainable, trainer.net().params().trainable));
  // Raw weights moved away from initialization, and the EMA trails them.
  const ModelParams init = BuildNet(config).params();
  EXPECT_FALSE(SameValues(init.trainable, trainer.net().params().trainable));
}

TEST(TrainerTest, ResumeEqualsUninterruptedRun) {
  const RunConfig config = ToyConfig();
  Trainer straight = ToyTrainer(config);
  straight.Step();
  straight.Step();
  const TrainStats expected = straight.Step();

  Trainer first = ToyTrainer(config);
  first.Step();
  first.Step();
  const std::vector<uint8_t> bytes = EncodeCheckpoint(first.Snapshot());
  RunConfig other = config;
  other.net_seed = 99;  // initial weights are replaced by the checkpoint
  Trainer resumed = ToyTrainer(other);
  resumed.Restore(DecodeCheckpoint(bytes));
  EXPECT_EQ(resumed.iteration(), 2u);
  const TrainStats got = resumed.Step();
  EXPECT_TRUE(SameStats(got, expected)) << FormatLogLine(got) << " vs "
                                        << FormatLogLine(expected);
  EXPECT_TRUE(SameValues(resumed.net().params().trainable,
                         straight.net().params().trainable));
  EXPECT_TRUE(SameValues(resumed.ema().trainable, straight.ema().trainable));
}

TEST(TrainerTest, RestoreRejectsForeignCheckpoint) {
  const RunConfig config = ToyConfig();
  Trainer trainer = ToyTrainer(config);
  Checkpoint c = trainer.Snapshot();
  c.params.trainable.erase(c.params.trainable.begin());
  EXPECT_THROW(trainer.Restore(c), SizeError);
}

TEST(TrainerTest, NonFiniteLossAbortsWithSnapshot) {
  const RunConfig config = ToyConfig();
  std::vector<double> bad(16384, 0.1);
  bad[100] = std::numeric_limits<double>::quiet_NaN();
  Trainer trainer(config, SegmentSource({bad}, {"bad"}, 16384, false));
  const fs::path dir = fs::temp_directory_path() / "mrcqt_trainer_nan";
  fs::remove_all(dir);
  TrainRunOptions options;
  options.until = 3;
  options.run_dir = dir.string();
  try {
    RunTraining(trainer, options);
    FAIL() << "NaN loss did not abort";
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("iteration 1"), std::string::npos) << what;
    EXPECT_NE(what.find("sigmas"), std::string::npos) << what;
  }
  EXPECT_EQ(trainer.iteration(), 0u);
  const Checkpoint snap = LoadCheckpoint((dir / "nan_snapshot.ckpt").string());
  EXPECT_EQ(snap.iteration, 0u);
  EXPECT_EQ(EncodeCheckpoint(snap), EncodeCheckpoint(trainer.Snapshot()));
}

TEST(TrainerTest, RunWritesLogAndCheckpointsAtCadence) {
  RunConfig config = ToyConfig();
  config.trainer.checkpoint_every = 2;
  Trainer trainer = ToyTrainer(config);
  const fs::path dir = fs::temp_directory_path() / "mrcqt_trainer_run";
  fs::remove_all(dir);
  std::ostringstream log;
  TrainRunOptions options;
  options.until = 3;
  options.run_dir = dir.string();
  options.log = &log;
  RunTraining(trainer, options);
  std::istringstream lines(log.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    uint64_t iter;
    double loss, sigma, norm;
    ASSERT_TRUE(fields >> iter >> loss >> sigma >> norm) << line;
    EXPECT_EQ(iter, static_cast<uint64_t>(++count));
  }
  EXPECT_EQ(count, 3);
  EXPECT_TRUE(fs::exists(dir / "ckpt_00000002.ckpt"));
  EXPECT_FALSE(fs::exists(dir / "ckpt_00000001.ckpt"));
  EXPECT_EQ(LoadCheckpoint((dir / "latest.ckpt").string()).iteration, 3u);
}

TEST(TrainerTest, GenerateIsDeterministicAndFinite) {
  RunConfig config = ToyConfig();
  config.generate.schedule.num_steps = 3;
  const ModelParams weights = BuildNet(config).params();
  const auto a = GenerateWaveforms(config, weights, 2, 5);
  const auto b = GenerateWaveforms(config, weights, 2, 5);
  ASSERT_EQ(a.size(), 2u);
  ASSERT_EQ(a[0].size(), 16384u);
  EXPECT_EQ(a, b);
  for (double v : a[0]) ASSERT_TRUE(std::isfinite(v));
  EXPECT_NE(a[0], a[1]);
}

}  // namespace
}  // namespace mrcqt
