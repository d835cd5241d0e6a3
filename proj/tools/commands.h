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


#ifndef MRCQT_TOOLS_COMMANDS_H_
#define MRCQT_TOOLS_COMMANDS_H_

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mrcqt/config.h"
#include "mrcqt/diffusion.h"
#include "mrcqt/eval.h"

// Command implementations behind the `mrcqt` tool, shared with the
// acceptance runner.
namespace mrcqt::cli {

// --- roundtrip ---

struct OctaveShape {
  int octave = 0;
  int bins = 0;
  std::size_t frames = 0;
  double f_lo = 0.0;
  double f_hi = 0.0;
  std::string resampling;
};

struct RoundtripReport {
  std::size_t input_length = 0;
  std::size_t transform_length = 0;  // input zero-padded to this
  double sample_rate = 0.0;
  double error_db = 0.0;  // 10 log10(|x - x'|^2 / |x|^2)
  std::vector<OctaveShape> octaves;  // highest octave first
  std::size_t residual_frames_low = 0;
  std::size_t residual_frames_high = 0;
};

// Throws ParameterError on a sample-rate mismatch or an all-zero signal.
RoundtripReport RoundTrip(const RunConfig& config,
                          std::span<const double> signal, double sample_rate);
void PrintRoundtrip(const RoundtripReport& report, std::ostream& out);

// --- fixtures ---

// white, tone_low, tone_high, two_tone, chirp_linear, chirp_log, clicks,
// impulse, noise_burst, am_tone.
const std::vector<std::string>& FixtureNames();
// Throws ConfigError for an unknown name.
std::vector<double> MakeFixture(const std::string& name, std::size_t length,
                                double sample_rate);

// --- generate ---

void PrintScheduleHeader(const NoiseScheduleConfig& schedule,
                         std::ostream& out);

// --- fad ---

// Embeds every *.wav of `dir` (name order). Throws ParameterError when the
// directory holds no audio.
EmbeddingSet EmbedDirectory(const std::string& dir);
FadReport DirectoryFad(const std::string& generated_dir,
                       const std::string& reference_dir,
                       const ShrinkageConfig& shrinkage);
void PrintFadTable(const FadReport& report, std::ostream& out);
std::string FadJson(const FadReport& report);

// Full command line; returns the process exit code.
int Main(int argc, char** argv);

}  // namespace mrcqt::cli

#endif  // MRCQT_TOOLS_COMMANDS_H_
