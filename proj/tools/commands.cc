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


#include "commands.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrcqt/checkpoint.h"
#include "mrcqt/cqt.h"
#include "mrcqt/dataset.h"
#include "mrcqt/error.h"
#include "mrcqt/grad_suite.h"
#include "mrcqt/kernels.h"
#include "mrcqt/rng.h"
#include "mrcqt/spectral.h"
#include "mrcqt/trainer.h"
#include "mrcqt/wav.h"

namespace mrcqt::cli {
namespace {

namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

std::vector<std::string> WavFiles(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw ParameterError("'" + dir + "' is not a directory");
  }
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

}  // namespace

// --- roundtrip ---

RoundtripReport RoundTrip(const RunConfig& config,
                          std::span<const double> signal, double sample_rate) {
  const MultiResSpec& spec = config.transform.spec;
  if (sample_rate != spec.sample_rate()) {
    throw ParameterError("roundtrip: input sampled at " +
                         std::to_string(sample_rate) + " Hz, config expects " +
                         std::to_string(spec.sample_rate()));
  }
  RoundtripReport report;
  report.input_length = signal.size();
  report.sample_rate = sample_rate;
  report.transform_length =
      std::max(config.transform.signal_length, NextPowerOfTwo(signal.size()));
  std::vector<double> x(signal.begin(), signal.end());
  x.resize(report.transform_length, 0.0);
  const MultiResCqt cqt(spec, report.transform_length);
  const std::vector<double> y = cqt.Inverse(cqt.Forward(x));
  long double err = 0, energy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    err += (x[i] - y[i]) * (x[i] - y[i]);
    energy += x[i] * x[i];
  }
  if (energy == 0) throw ParameterError("roundtrip: all-zero input");
  report.error_db = err == 0 ? -400.0
                             : 10.0 * std::log10(static_cast<double>(err / energy));
  const FilterBank& bank = cqt.bank();
  for (int o = spec.num_octaves(); o >= 1; --o) {
    const OctaveSpec& os = spec.octave_table[o - 1];
    const OctaveLayout& layout = bank.octaves[o - 1];
    report.octaves.push_back({o, layout.bins, layout.frame_count, os.f_lo,
                              os.f_hi, ResamplingName(os.resampling)});
  }
  report.residual_frames_low = bank.lowpass.frame_count;
  report.residual_frames_high = bank.highpass.frame_count;
  return report;
}

void PrintRoundtrip(const RoundtripReport& r, std::ostream& out) {
  out << "samples: " << r.input_length << " (transform length "
      << r.transform_length << ", " << r.sample_rate << " Hz)\n";
  out << "octave  bins  frames  range_hz              next\n";
  for (const OctaveShape& o : r.octaves) {
    char line[128];
    std::snprintf(line, sizeof(line), "%6d  %4d  %6zu  %8.2f - %8.2f  %s\n",
                  o.octave, o.bins, o.frames, o.f_lo, o.f_hi,
                  o.resampling.c_str());
    out << line;
  }
  out << "residual frames: lowpass " << r.residual_frames_low << ", highpass "
      << r.residual_frames_high << "\n";
  char err[64];
  std::snprintf(err, sizeof(err), "%.2f", r.error_db);
  out << "reconstruction error: " << err << " dB\n";
}

// --- fixtures ---

const std::vector<std::string>& FixtureNames() {
  static const std::vector<std::string> names = {
      "white",     "tone_low", "tone_high", "two_tone",    "chirp_linear",
      "chirp_log", "clicks",   "impulse",   "noise_burst", "am_tone"};
  return names;
}

std::vector<double> MakeFixture(const std::string& name, std::size_t length,
                                double sample_rate) {
  std::vector<double> x(length, 0.0);
  const double fs = sample_rate;
  const double duration = static_cast<double>(length) / fs;
  auto tone = [&](double f, double amp) {
    for (std::size_t n = 0; n < length; ++n) {
      x[n] += amp * std::sin(2.0 * kPi * f * static_cast<double>(n) / fs);
    }
  };
  Rng rng(1);
  if (name == "white") {
    for (double& v : x) v = std::clamp(0.3 * rng.Normal(), -1.0, 1.0);
  } else if (name == "tone_low") {
    tone(0.01 * fs, 0.5);
  } else if (name == "tone_high") {
    tone(0.3 * fs, 0.5);
  } else if (name == "two_tone") {
    tone(0.03 * fs, 0.5);
    tone(0.13 * fs, 0.3);
  } else if (name == "chirp_linear" || name == "chirp_log") {
    const double f0 = 0.001 * fs, f1 = 0.45 * fs;
    const double k = f1 / f0;
    for (std::size_t n = 0; n < length; ++n) {
      const double t = static_cast<double>(n) / fs;
      const double phase =
          name == "chirp_linear"
              ? f0 * t + 0.5 * (f1 - f0) * t * t / duration
              : f0 * duration / std::log(k) * (std::pow(k, t / duration) - 1.0);
      x[n] = 0.5 * std::sin(2.0 * kPi * phase);
    }
  } else if (name == "clicks") {
    const std::size_t period = std::max<std::size_t>(1, length / 20);
    for (std::size_t n = period / 2; n < length; n += period) x[n] = 0.9;
  } else if (name == "impulse") {
    x[length / 3] = 1.0;
  } else if (name == "noise_burst") {
    for (std::size_t n = 3 * length / 8; n < 5 * length / 8; ++n) {
      x[n] = std::clamp(0.3 * rng.Normal(), -1.0, 1.0);
    }
  } else if (name == "am_tone") {
    for (std::size_t n = 0; n < length; ++n) {
      const double t = static_cast<double>(n) / fs;
      x[n] = 0.4 * (1.0 + 0.8 * std::sin(2.0 * kPi * 3.0 * t)) *
             std::sin(2.0 * kPi * 0.05 * fs * t);
    }
  } else {
    throw ConfigError("unknown fixture '" + name + "'");
  }
  return x;
}

// --- generate ---

void PrintScheduleHeader(const NoiseScheduleConfig& schedule,
                         std::ostream& out) {
  const std::vector<double> tau = ScheduleTimes(schedule);
  const std::size_t last = tau.size() - 1;
  std::ostringstream s;
  s << std::setprecision(10);
  s << "schedule: T=" << schedule.num_steps << " sigma_max=" << schedule.sigma_max
    << " sigma_min=" << schedule.sigma_min << " rho=" << schedule.rho
    << " evaluations/sample=" << HeunEvaluations(schedule.num_steps) << "\n";
  s << "tau_0 = " << tau.front() << "\n";
  s << "tau_" << last << " = " << tau[last] << "\n";
  out << s.str();
}

// --- fad ---

EmbeddingSet EmbedDirectory(const std::string& dir) {
  const std::vector<std::string> paths = WavFiles(dir);
  if (paths.empty()) throw ParameterError("fad: no .wav files in '" + dir + "'");
  EmbeddingSet set;
  set.vectors.resize(static_cast<Eigen::Index>(paths.size()),
                     static_cast<Eigen::Index>(kEmbeddingDim));
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const WavFile wav = LoadWav(paths[i]);
    const std::vector<double> e = EmbedAudio(wav.samples, wav.sample_rate);
    for (std::size_t d = 0; d < e.size(); ++d) {
      set.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = e[d];
    }
    set.labels.push_back(fs::path(paths[i]).filename().string());
  }
  return set;
}

FadReport DirectoryFad(const std::string& generated_dir,
                       const std::string& reference_dir,
                       const ShrinkageConfig& shrinkage) {
  const EmbeddingSet reference = EmbedDirectory(reference_dir);
  const EmbeddingSet generated = EmbedDirectory(generated_dir);
  FadReport report = PerExampleFad(FitGaussian(reference.vectors, shrinkage),
                                   generated, shrinkage);
  report.reference = reference_dir;
  return report;
}

void PrintFadTable(const FadReport& report, std::ostream& out) {
  char line[256];
  std::snprintf(line, sizeof(line), "global FAD: %.9g (reference: %s)\n",
                report.global_fad, report.reference.c_str());
  out << line;
  out << "example                          leave_one_out    contribution\n";
  for (const FadEntry& e : report.per_example) {
    std::snprintf(line, sizeof(line), "%-32s %14.6g  %14.6g\n", e.id.c_str(),
                  e.leave_one_out, e.contribution);
    out << line;
  }
}

std::string FadJson(const FadReport& report) {
  nlohmann::json j;
  j["global_fad"] = report.global_fad;
  j["reference"] = report.reference;
  j["per_example"] = nlohmann::json::array();
  for (const FadEntry& e : report.per_example) {
    j["per_example"].push_back({{"id", e.id},
                                {"leave_one_out", e.leave_one_out},
                                {"contribution", e.contribution}});
  }
  return j.dump(2);
}

// --- command line ---

namespace {

struct Args {
  std::string config;
  std::string input;
  std::string output;
  std::string run_dir;
  std::string resume;
  std::string checkpoint;
  std::string generated;
  std::string reference;
  std::string json;
  std::string name;
  uint64_t iterations = 0;
  uint64_t seed = 0;
  std::size_t num = 0;
  std::size_t steps = 0;
  bool raw = false;
  bool header_only = false;
  bool list = false;
};

void CmdRoundtrip(const Args& a) {
  const RunConfig config = LoadRunConfig(a.config);
  const WavFile wav = LoadWav(a.input);
  std::cout << "input: " << a.input << "\n";
  PrintRoundtrip(RoundTrip(config, wav.samples, wav.sample_rate), std::cout);
}

void CmdFixture(const Args& a, const CLI::App& cmd) {
  if (a.list) {
    for (const std::string& n : FixtureNames()) std::cout << n << "\n";
    return;
  }
  if (a.name.empty() || a.output.empty()) {
    throw ConfigError("fixture: --name and --out are required");
  }
  const RunConfig config = LoadRunConfig(a.config);
  const std::size_t length =
      cmd.count("--length") ? a.num : config.transform.signal_length;
  const double rate = config.transform.spec.sample_rate();
  SaveWav(a.output, MakeFixture(a.name, length, rate), rate,
          SampleFormat::kFloat32);
  std::cout << "wrote " << a.output << " (" << length << " samples)\n";
}

void CmdTrain(const Args& a, const CLI::App& cmd) {
  RunConfig config = LoadRunConfig(a.config);
  if (cmd.count("--run-dir")) config.run_dir = a.run_dir;
  if (cmd.count("--seed")) config.trainer.seed = a.seed;
  const uint64_t until =
      cmd.count("--iterations") ? a.iterations : config.trainer.num_iterations;
  SegmentSource data = LoadTrainingData(config, &std::cerr);
  Trainer trainer(config, std::move(data));
  if (!a.resume.empty()) {
    const Checkpoint c = LoadCheckpoint(a.resume);
    if (c.config_text != config.text) {
      std::cerr << "warning: checkpoint was written with a different config\n";
    }
    trainer.Restore(c);
  }
  fs::create_directories(config.run_dir);
  std::ofstream(fs::path(config.run_dir) / "config.cfg") << config.text;
  const fs::path log_path = fs::path(config.run_dir) / "loss.log";
  std::ofstream log(log_path, a.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw FormatError("train: cannot open " + log_path.string());
  std::cout << "train: " << trainer.net().params().parameter_count()
            << " parameters, iterations " << trainer.iteration() << " -> "
            << until << ", batch " << config.trainer.batch_size << ", seed "
            << config.trainer.seed << ", kernels " << kernels::IsaName(kernels::ActiveIsa())
            << "\nlog: " << log_path.string() << "\n";
  const auto start = std::chrono::steady_clock::now();
  double window = 0.0;
  std::size_t window_count = 0;
  TrainRunOptions options;
  options.until = until;
  options.run_dir = config.run_dir;
  options.log = &log;
  options.on_step = [&](const TrainStats& s) {
    window += s.loss;
    ++window_count;
    if (s.iteration % 100 == 0 || s.iteration == until) {
      const double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start)
                              .count();
      std::printf("iter %llu  mean loss %.6g  (%.1f s)\n",
                  static_cast<unsigned long long>(s.iteration),
                  window / static_cast<double>(window_count), secs);
      std::fflush(stdout);
      window = 0.0;
      window_count = 0;
    }
  };
  RunTraining(trainer, options);
  std::cout << "checkpoint: "
            << (fs::path(config.run_dir) / "latest.ckpt").string() << "\n";
}

void CmdGenerate(const Args& a, const CLI::App& cmd) {
  RunConfig config = LoadRunConfig(a.config);
  if (cmd.count("--steps")) config.generate.schedule.num_steps = a.steps;
  config.generate.schedule.Validate();
  const std::size_t num =
      cmd.count("--num") ? a.num : config.generate.num_samples;
  const uint64_t seed = cmd.count("--seed") ? a.seed : config.generate.seed;
  PrintScheduleHeader(config.generate.schedule, std::cout);
  std::cout << "samples: " << num << ", seed " << seed << "\n";
  if (a.header_only) return;
  if (a.output.empty()) throw ConfigError("generate: --out is required");
  ModelParams weights;
  if (a.checkpoint.empty()) {
    std::cerr << "warning: no checkpoint; using initial (zero-map) weights\n";
    weights = BuildNet(config).params();
  } else {
    Checkpoint c = LoadCheckpoint(a.checkpoint);
    weights = a.raw ? c.params : c.ema;
    std::cout << "weights: " << (a.raw ? "raw" : "ema") << " @ iteration "
              << c.iteration << "\n";
  }
  const auto samples = GenerateWaveforms(config, weights, num, seed);
  fs::create_directories(a.output);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%04zu.wav", i);
    SaveWav((fs::path(a.output) / name).string(), samples[i],
            config.transform.spec.sample_rate(), config.generate.format);
  }
  std::cout << "wrote " << samples.size() << " files to " << a.output << "\n";
}

void CmdFad(const Args& a) {
  const RunConfig config = LoadRunConfig(a.config);
  const FadReport report = DirectoryFad(a.generated, a.reference, config.eval);
  PrintFadTable(report, std::cout);
  if (!a.json.empty()) {
    std::ofstream out(a.json);
    out << FadJson(report) << "\n";
    if (!out) throw FormatError("fad: cannot write " + a.json);
  }
}

bool CmdGradcheck(const Args& a) {
  const RunConfig config = LoadRunConfig(a.config);
  const GradSuiteResult result =
      RunGradientSuite(config, a.seed, [](const GradSuiteCase& c) {
        std::printf("%s  %-52s err %.3e  tol %.0e\n", c.passed ? "PASS" : "FAIL",
                    c.name.c_str(), c.error, c.tolerance);
        if (!c.passed) std::printf("      %s\n", c.detail.c_str());
        std::fflush(stdout);
      });
  const std::size_t failed = static_cast<std::size_t>(std::count_if(
      result.cases.begin(), result.cases.end(),
      [](const GradSuiteCase& c) { return !c.passed; }));
  std::cout << result.cases.size() - failed << "/" << result.cases.size()
            << " gradient checks passed\n";
  return failed == 0;
}

}  // namespace

int Main(int argc, char** argv) {
  CLI::App app{"mrcqt: multi-resolution constant-Q diffusion toolkit"};
  app.require_subcommand(1);
  Args a;
  auto config_option = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", a.config, "run configuration file")
        ->required();
  };

  CLI::App* roundtrip = app.add_subcommand(
      "roundtrip", "forward + inverse transform of a WAV; error and grid shapes");
  config_option(roundtrip);
  roundtrip->add_option("-i,--input", a.input, "input WAV")->required();

  CLI::App* fixture =
      app.add_subcommand("fixture", "write a synthetic test signal as WAV");
  config_option(fixture);
  fixture->add_option("-n,--name", a.name, "fixture name (see --list)");
  fixture->add_option("-o,--out", a.output, "output WAV");
  fixture->add_option("--length", a.num, "samples (default: segment length)");
  fixture->add_flag("--list", a.list, "list fixture names");

  CLI::App* train = app.add_subcommand("train", "train the denoiser");
  config_option(train);
  train->add_option("--run-dir", a.run_dir, "override paths.run_dir");
  train->add_option("--iterations", a.iterations,
                    "target iteration (default trainer.iterations)");
  train->add_option("--seed", a.seed, "override trainer.seed");
  train->add_option("--resume", a.resume, "checkpoint to resume from");

  CLI::App* generate =
      app.add_subcommand("generate", "sample waveforms with the Heun sampler");
  config_option(generate);
  generate->add_option("--checkpoint", a.checkpoint,
                       "checkpoint (EMA weights; default: initial weights)");
  generate->add_option("-o,--out", a.output, "output directory");
  generate->add_option("--num", a.num, "override generate.num_samples");
  generate->add_option("--seed", a.seed, "override generate.seed");
  generate->add_option("--steps", a.steps, "override schedule.num_steps");
  generate->add_flag("--raw", a.raw, "use raw instead of EMA weights");
  generate->add_flag("--header-only", a.header_only,
                     "print the schedule header and exit");

  CLI::App* fad = app.add_subcommand(
      "fad", "Frechet distance of generated vs reference embeddings");
  config_option(fad);
  fad->add_option("-g,--generated", a.generated, "generated WAV directory")
      ->required();
  fad->add_option("-r,--reference", a.reference, "reference WAV directory")
      ->required();
  fad->add_option("--json", a.json, "also write the report as JSON");

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "autodiff, adjoint and end-to-end gradient checks");
  config_option(gradcheck);
  gradcheck->add_option("--seed", a.seed, "probe seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*roundtrip) CmdRoundtrip(a);
    if (*fixture) CmdFixture(a, *fixture);
    if (*train) CmdTrain(a, *train);
    if (*generate) CmdGenerate(a, *generate);
    if (*fad) CmdFad(a);
    if (*gradcheck && !CmdGradcheck(a)) return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace mrcqt::cli
