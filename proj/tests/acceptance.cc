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


// Acceptance runner: one PASS/FAIL line per criterion 1-10.
//
//   acceptance [--only 1,2,...] [--allow-fail 7] [--seeds 5]
//              [--work-dir DIR] [--report FILE]
//
// Exits 0 when every criterion not listed in --allow-fail passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "commands.h"
#include "mrcqt/config.h"
#include "mrcqt/cqt.h"
#include "mrcqt/dataset.h"
#include "mrcqt/diffusion.h"
#include "mrcqt/eval.h"
#include "mrcqt/grad_suite.h"
#include "mrcqt/net.h"
#include "mrcqt/rng.h"
#include "mrcqt/spectral.h"
#include "mrcqt/trainer.h"
#include "mrcqt/wav.h"

namespace mrcqt {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const std::string kConfigDir = MRCQT_SOURCE_DIR "/configs";

// tau_25 of the paper schedule, evaluated independently in 50-digit
// arithmetic.
constexpr double kTau25 = 0.07685071036954939018581474678734935;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Format(const char* fmt, double a, double b = 0, double c = 0,
                   double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c, d);
  return buf;
}

RunConfig Paper() { return LoadRunConfig(kConfigDir + "/paper.cfg"); }
RunConfig Toy() { return LoadRunConfig(kConfigDir + "/toy.cfg"); }

std::vector<double> Noise(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& e : v) e = rng.Normal();
  return v;
}

// 1. Round trip of ten fixtures through WAV files under both configs.
Outcome TransformInvertibility(const fs::path& work) {
  const auto start = Clock::now();
  double worst = -1e9;
  std::size_t runs = 0;
  bool ok = true;
  std::ostringstream failures;
  for (const auto& [label, config] :
       {std::pair{"paper", Paper()}, std::pair{"toy", Toy()}}) {
    const double rate = config.transform.spec.sample_rate();
    for (const std::string& name : cli::FixtureNames()) {
      const fs::path path = work / (std::string(label) + "_" + name + ".wav");
      SaveWav(path.string(),
              cli::MakeFixture(name, config.transform.signal_length, rate), rate,
              SampleFormat::kFloat32);
      const WavFile wav = LoadWav(path.string());
      const cli::RoundtripReport r =
          cli::RoundTrip(config, wav.samples, wav.sample_rate);
      ++runs;
      worst = std::max(worst, r.error_db);
      const MultiResSpec& spec = config.transform.spec;
      bool shapes = r.octaves.size() == static_cast<std::size_t>(spec.num_octaves());
      for (const cli::OctaveShape& o : r.octaves) {
        shapes = shapes &&
                 o.bins == spec.octave_table[o.octave - 1].bins_per_octave;
      }
      if (!(r.error_db < -80.0) || !shapes) {
        ok = false;
        failures << " " << label << "/" << name;
      }
    }
  }
  const double secs = Seconds(start);
  ok = ok && secs < 120.0;
  return {ok, Format("worst %.1f dB over %.0f fixture runs (limit -80 dB), "
                     "%.1f s (limit 120 s)",
                     worst, static_cast<double>(runs), secs) +
                  failures.str()};
}

// 2. Paper octave grids against the table.
Outcome GridConformance() {
  const RunConfig config = Paper();
  const MultiResSpec& spec = config.transform.spec;
  const std::vector<int> expected = {32, 32, 16, 16, 16, 16, 8, 8, 8};  // 9..1
  const FilterBank bank = BuildMultiResBank(spec, config.transform.signal_length);
  bool ok = spec.num_octaves() == 9 && bank.octaves.size() == 9;
  std::ostringstream d;
  int freq_rows = 0, time_rows = 0;
  for (int o = 9; ok && o >= 1; --o) {
    const OctaveSpec& os = spec.octave_table[o - 1];
    const OctaveLayout& layout = bank.octaves[o - 1];
    ok = ok && os.bins_per_octave == expected[9 - o] &&
         layout.bins == expected[9 - o] && os.octave_index == o &&
         os.unet_level == 10 - o;
    if (o == 1) {
      ok = ok && os.resampling == Resampling::kNone;
      break;
    }
    const OctaveLayout& below = bank.octaves[o - 2];
    if (os.resampling == Resampling::kTime) {
      ++time_rows;
      ok = ok && below.frame_count * 2 == layout.frame_count &&
           below.bins == layout.bins;
    } else if (os.resampling == Resampling::kFreq) {
      ++freq_rows;
      ok = ok && below.frame_count == layout.frame_count &&
           below.bins * 2 == layout.bins;
    } else {
      ok = false;
    }
  }
  ok = ok && freq_rows == 2 && time_rows == 6 &&
       spec.octave_table[7].resampling == Resampling::kFreq &&
       spec.octave_table[3].resampling == Resampling::kFreq;
  d << "bins (octave 9..1):";
  for (int o = 9; o >= 1; --o) d << " " << bank.octaves[o - 1].bins;
  d << "; frames:";
  for (int o = 9; o >= 1; --o) d << " " << bank.octaves[o - 1].frame_count;
  d << "; " << time_rows << " Time rows, " << freq_rows << " Freq rows";
  return {ok, d.str()};
}

// 3. Schedule endpoints, monotonicity, a high-precision interior value and
// the rho = 1 linear grid.
Outcome ScheduleCorrectness() {
  const NoiseScheduleConfig cfg = Paper().generate.schedule;
  const std::vector<double> tau = ScheduleTimes(cfg);
  bool ok = cfg.num_steps == 51 && tau.size() == 51 && tau[0] == 8.0 &&
            tau[50] == 1e-5;
  for (std::size_t i = 1; i < tau.size(); ++i) ok = ok && tau[i] < tau[i - 1];
  const double interior = std::abs(tau[25] - kTau25) / kTau25;
  ok = ok && interior < 1e-13;
  NoiseScheduleConfig linear = cfg;
  linear.rho = 1.0;
  const std::vector<double> lin = ScheduleTimes(linear);
  const double step = (linear.sigma_min - linear.sigma_max) / 50.0;
  double dev = 0.0;
  for (std::size_t i = 1; i < lin.size(); ++i) {
    dev = std::max(dev, std::abs((lin[i] - lin[i - 1]) - step));
  }
  ok = ok && dev < 1e-12;
  return {ok, Format("tau_0 = %.17g, tau_50 = %.17g, tau_25 rel. dev %.1e, "
                     "rho=1 spacing dev %.1e",
                     tau[0], tau[50], interior, dev)};
}

// 4. Heun sampler against the closed-form N(0, 1) score.
Outcome SamplerValidity() {
  const auto start = Clock::now();
  const ScoreFn gaussian = [](std::span<const double> x, double tau,
                              std::span<double> s) {
    for (std::size_t i = 0; i < x.size(); ++i) s[i] = -x[i] / (1.0 + tau * tau);
  };
  const NoiseScheduleConfig cfg = Paper().generate.schedule;
  Rng rng(4);
  const auto samples = HeunSample(gaussian, cfg, rng, 4096, 1);
  double mean = 0.0, var = 0.0;
  for (const auto& s : samples) mean += s[0];
  mean /= samples.size();
  for (const auto& s : samples) var += (s[0] - mean) * (s[0] - mean);
  var /= samples.size() - 1;

  // The ODE dx/dtau = tau x / (1 + tau^2) has x(tau) = x0 sqrt((1 + tau^2) /
  // (1 + tau0^2)).
  auto terminal_error = [&](std::size_t steps) {
    NoiseScheduleConfig c = cfg;
    c.num_steps = steps;
    const std::vector<double> times = ScheduleTimes(c);
    std::vector<double> x = {1.0};
    HeunIntegrate(gaussian, times, x);
    const double exact = std::sqrt((1.0 + times.back() * times.back()) /
                                   (1.0 + times[0] * times[0]));
    return std::abs(x[0] - exact);
  };
  const double order = std::log2(terminal_error(51) / terminal_error(101));
  const double secs = Seconds(start);
  const bool ok = mean >= -0.05 && mean <= 0.05 && var >= 0.93 &&
                  var <= 1.07 && order >= 1.7 && order <= 2.3 && secs < 60.0;
  return {ok, Format("mean %.4f, variance %.4f, order %.3f, %.1f s", mean, var,
                     order, secs)};
}

// 5. The gradient suite on the toy config.
Outcome GradientIntegrity() {
  const auto start = Clock::now();
  const GradSuiteResult result = RunGradientSuite(Toy(), 0);
  double op = 0.0, e2e = 0.0, adjoint = 0.0;
  std::string failed;
  for (const GradSuiteCase& c : result.cases) {
    double& slot = c.name.rfind("end-to-end", 0) == 0 ? e2e
                   : c.name.find("adjoint") != std::string::npos ? adjoint
                                                                  : op;
    slot = std::max(slot, c.error);
    if (!c.passed) failed += " [" + c.name + "]";
  }
  const double secs = Seconds(start);
  return {result.passed() && secs < 300.0,
          Format("%.0f checks; max op err %.1e (< 1e-4), end-to-end %.1e "
                 "(< 1e-3), adjoint %.1e (< 1e-8)",
                 static_cast<double>(result.cases.size()), op, e2e, adjoint) +
              Format(", %.1f s", secs) + failed};
}

// 6. A fresh model is exactly the zero map, so the score is the pure skip.
Outcome ZeroInit() {
  bool ok = true;
  std::ostringstream d;
  for (const auto& [label, config] :
       {std::pair{"toy", Toy()}, std::pair{"paper", Paper()}}) {
    RunConfig c = config;
    // The paper net at 2^16 samples keeps this check fast; the init
    // contract does not depend on the length.
    if (std::string(label) == "paper") c.transform.signal_length = 1u << 16;
    const MrCqtNet net = BuildNet(c);
    const DenoiserFn f = [&](const Tensor& y, double s) {
      return net.Forward(y, s);
    };
    Rng rng(6);
    std::size_t nonzero = 0, score_mismatch = 0;
    NoGradGuard no_grad;
    const std::vector<double> sigmas =
        std::string(label) == "paper" ? std::vector<double>{0.3}
                                      : std::vector<double>{1e-4, 0.3, 8.0};
    for (double sigma : sigmas) {
      const std::size_t n = c.transform.signal_length;
      const Tensor x = Tensor::FromData({n}, Noise(n, rng));
      const Tensor out = f(x, sigma);
      for (double v : out.data()) nonzero += v != 0.0;
      const Tensor s = PreconditionedScore(f, c.preconditioner, x, sigma);
      // Exact equality holds for the grouping x * ((c_skip - 1) / sigma^2).
      const double k = (c.preconditioner.CSkip(sigma) - 1.0) / (sigma * sigma);
      for (std::size_t i = 0; i < n; ++i) {
        const double expected = x.data()[i] * k;
        score_mismatch += s.data()[i] != expected;
      }
    }
    ok = ok && nonzero == 0 && score_mismatch == 0;
    d << label << ": " << nonzero << " nonzero outputs, " << score_mismatch
      << " score mismatches; ";
  }
  return {ok, d.str()};
}

// 7. Toy training over several seeds.
Outcome ToyTraining(std::size_t num_seeds) {
  const auto start = Clock::now();
  const RunConfig base = Toy();
  const std::size_t iterations = 2000, window = 200, count = 64;
  const SegmentSource data = LoadTrainingData(base, nullptr);
  Eigen::MatrixXd ref(static_cast<Eigen::Index>(data.num_clips()),
                      static_cast<Eigen::Index>(kEmbeddingDim));
  for (std::size_t i = 0; i < data.num_clips(); ++i) {
    const std::vector<double> e =
        EmbedAudio(data.Segment({i, 0}), base.transform.spec.sample_rate());
    for (std::size_t k = 0; k < e.size(); ++k) {
      ref(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = e[k];
    }
  }
  const GaussianStats reference = FitGaussian(ref, base.eval);
  auto fad = [&](const RunConfig& config, const ModelParams& weights) {
    const auto samples = GenerateWaveforms(config, weights, count,
                                           config.generate.seed);
    Eigen::MatrixXd gen(static_cast<Eigen::Index>(count),
                        static_cast<Eigen::Index>(kEmbeddingDim));
    for (std::size_t i = 0; i < count; ++i) {
      const std::vector<double> e =
          EmbedAudio(samples[i], config.transform.spec.sample_rate());
      for (std::size_t k = 0; k < e.size(); ++k) {
        gen(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = e[k];
      }
    }
    return FrechetDistance(reference, FitGaussian(gen, config.eval));
  };

  std::size_t successes = 0;
  std::ostringstream d;
  for (std::size_t seed = 0; seed < num_seeds; ++seed) {
    RunConfig config = base;
    config.trainer.seed = seed;
    config.net_seed = seed;
    Trainer trainer(config, data);
    const double fad0 = fad(config, trainer.ema());
    std::vector<double> losses;
    for (std::size_t i = 0; i < iterations; ++i) {
      losses.push_back(trainer.Step().loss);
      if ((i + 1) % 250 == 0) {
        std::fprintf(stderr, "  seed %zu: iteration %zu (%.0f s)\n", seed, i + 1,
                     Seconds(start));
      }
    }
    const double first =
        std::accumulate(losses.begin(), losses.begin() + window, 0.0) / window;
    const double last =
        std::accumulate(losses.end() - window, losses.end(), 0.0) / window;
    const double reduction = 1.0 - last / first;
    const double fad_end = fad(config, trainer.ema());
    const bool ok = reduction >= 0.30 && fad_end < fad0;
    successes += ok;
    d << Format("seed %.0f: loss %.4g -> %.4g (-%.1f%%)", seed, first, last,
                100.0 * reduction)
      << Format(", FAD %.5g -> %.5g: ", fad0, fad_end) << (ok ? "ok" : "miss")
      << "; ";
    std::fprintf(stderr, "  seed %zu done (%.0f s)\n", seed, Seconds(start));
  }
  const double secs = Seconds(start);
  const bool quality = successes * 5 >= 4 * num_seeds;
  d << successes << "/" << num_seeds << " seeds ok (need >= 4/5); runtime "
    << Format("%.0f s (limit 1800 s)", secs);
  if (quality && secs >= 1800.0) d << " -- runtime over budget";
  return {quality && secs < 1800.0, d.str()};
}

// 8. Frechet distance against closed forms and an eigenvalue oracle.
Outcome FrechetOracle() {
  GaussianStats a{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)};
  GaussianStats b{Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Identity(1, 1)};
  const double one = FrechetDistance(a, b);
  double worst = 0.0;
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    GaussianStats s[2];
    for (GaussianStats& g : s) {
      Eigen::MatrixXd m(3, 3);
      for (Eigen::Index i = 0; i < 9; ++i) m.data()[i] = rng.Normal();
      g.covariance = m * m.transpose() + 0.1 * Eigen::MatrixXd::Identity(3, 3);
      g.mean = Eigen::VectorXd(3);
      for (Eigen::Index i = 0; i < 3; ++i) g.mean(i) = rng.Normal();
    }
    // Independent oracle: eigenvalues of the (non-symmetric) product.
    Eigen::EigenSolver<Eigen::MatrixXd> eig(s[0].covariance * s[1].covariance);
    double trace_sqrt = 0.0;
    for (Eigen::Index i = 0; i < 3; ++i) {
      trace_sqrt += std::sqrt(eig.eigenvalues()(i)).real();
    }
    const double oracle = (s[0].mean - s[1].mean).squaredNorm() +
                          s[0].covariance.trace() + s[1].covariance.trace() -
                          2.0 * trace_sqrt;
    worst = std::max(worst,
                     std::abs(FrechetDistance(s[0], s[1]) - oracle) / oracle);
  }
  Eigen::MatrixXd rows(50, 4);
  for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = rng.Normal();
  const GaussianStats same = FitGaussian(rows);
  const double self = FrechetDistance(same, FitGaussian(rows));
  const bool ok = std::abs(one - 1.0) < 1e-8 && worst < 1e-6 &&
                  std::abs(self) < 1e-10;
  return {ok, Format("N(0,1) vs N(1,1): %.12f; 3-D oracle rel. err %.1e; "
                     "identical sets %.1e",
                     one, worst, self)};
}

// 9. Tones one octave apart inside the b = 16 range.
Outcome PitchEquivariance() {
  const RunConfig config = Paper();
  const MultiResCqt cqt(config.transform.spec, config.transform.signal_length);
  const FilterBank& bank = cqt.bank();
  const double rate = config.transform.spec.sample_rate();
  const std::size_t n = config.transform.signal_length;
  auto argmax = [&](double hz) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
    }
    const OctaveGridCoefficients c = cqt.Forward(x);
    std::pair<int, std::size_t> best{0, 0};
    double peak = -1.0;
    for (std::size_t o = 0; o < c.octaves.size(); ++o) {
      const ComplexGrid& g = c.octaves[o];
      for (std::size_t r = 0; r < g.rows; ++r) {
        for (std::size_t t = 0; t < g.cols; ++t) {
          if (std::abs(g.at(r, t)) > peak) {
            peak = std::abs(g.at(r, t));
            best = {static_cast<int>(o) + 1, r};
          }
        }
      }
    }
    return best;
  };
  bool ok = true;
  std::size_t pairs = 0;
  std::ostringstream d;
  // b = 16 covers octaves 4..7; pairs (4,5), (5,6), (6,7).
  for (int octave = 4; octave <= 6; ++octave) {
    for (std::size_t row : {0u, 5u, 11u, 15u}) {
      const OctaveLayout& layout = bank.octaves[octave - 1];
      const double hz = bank.bands[layout.first_band + row].center_hz;
      const auto lo = argmax(hz), hi = argmax(2.0 * hz);
      const bool pair_ok = lo.first == octave && hi.first == octave + 1 &&
                           lo.second == row && hi.second == row;
      ok = ok && pair_ok;
      ++pairs;
      if (!pair_ok) {
        d << " [" << hz << " Hz: (" << lo.first << "," << lo.second << ") vs ("
          << hi.first << "," << hi.second << ")]";
      }
    }
  }
  return {ok, std::to_string(pairs) +
                  " tone pairs, argmax in adjacent octaves at equal bin" +
                  d.str()};
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int RunCli(std::vector<std::string> args) {
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  std::ostringstream sink;
  std::streambuf* old = std::cout.rdbuf(sink.rdbuf());
  const int code = cli::Main(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  return code;
}

// 10. Two `train` runs and two `generate` runs from the same inputs.
Outcome Determinism(const fs::path& work) {
  const std::string cfg = kConfigDir + "/toy.cfg";
  const fs::path runs[2] = {work / "det_a", work / "det_b"};
  bool ok = true;
  for (const fs::path& r : runs) {
    fs::remove_all(r);
    ok = ok && RunCli({"mrcqt", "train", "-c", cfg, "--run-dir", r.string(),
                       "--iterations", "8"}) == 0;
    ok = ok && RunCli({"mrcqt", "generate", "-c", cfg, "--checkpoint",
                       (r / "latest.ckpt").string(), "-o",
                       (r / "gen").string(), "--num", "2"}) == 0;
  }
  const std::string log = ReadFile(runs[0] / "loss.log");
  const bool logs = !log.empty() && log == ReadFile(runs[1] / "loss.log");
  const bool ckpts = ReadFile(runs[0] / "latest.ckpt") ==
                     ReadFile(runs[1] / "latest.ckpt");
  bool wavs = true;
  for (const char* name : {"sample_0000.wav", "sample_0001.wav"}) {
    const std::string a = ReadFile(runs[0] / "gen" / name);
    wavs = wavs && !a.empty() && a == ReadFile(runs[1] / "gen" / name);
  }
  const std::size_t lines =
      static_cast<std::size_t>(std::count(log.begin(), log.end(), '\n'));
  return {ok && logs && ckpts && wavs,
          "loss logs (" + std::to_string(lines) + " lines) " +
              (logs ? "identical" : "DIFFER") + ", checkpoints " +
              (ckpts ? "identical" : "DIFFER") + ", generated wavs " +
              (wavs ? "identical" : "DIFFER")};
}

}  // namespace
}  // namespace mrcqt

int main(int argc, char** argv) {
  using namespace mrcqt;
  CLI::App app{"acceptance criteria runner"};
  std::vector<int> only, allow_fail;
  std::size_t seeds = 5;
  std::string work_dir =
      (fs::temp_directory_path() / "mrcqt_acceptance").string();
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--allow-fail", allow_fail,
                 "criteria whose failure does not fail the run")
      ->delimiter(',');
  app.add_option("--seeds", seeds, "seeds for criterion 7");
  app.add_option("--work-dir", work_dir, "scratch directory");
  std::string report_path;
  app.add_option("--report", report_path, "also write the result lines here");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work_dir);
  const fs::path work(work_dir);
  std::ofstream report;
  if (!report_path.empty()) report.open(report_path, std::ios::trunc);
  auto emit = [&](const std::string& line) {
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    if (report) report << line << std::flush;
  };
  char line[4096];

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria =
      {{"transform invertibility", [&] { return TransformInvertibility(work); }},
       {"grid conformance", GridConformance},
       {"schedule correctness", ScheduleCorrectness},
       {"sampler validity", SamplerValidity},
       {"gradient integrity", GradientIntegrity},
       {"zero-init contract", ZeroInit},
       {"toy training", [&] { return ToyTraining(seeds); }},
       {"frechet oracle", FrechetOracle},
       {"pitch equivariance", PitchEquivariance},
       {"determinism", [&] { return Determinism(work); }}};

  int passed = 0, run = 0, blocking = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) {
      continue;
    }
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    ++run;
    passed += outcome.passed;
    const bool allowed = std::find(allow_fail.begin(), allow_fail.end(), id) !=
                         allow_fail.end();
    if (!outcome.passed && !allowed) ++blocking;
    std::snprintf(line, sizeof(line), "criterion %2d %-24s %s  %s%s\n", id,
                  criteria[i].first.c_str(), outcome.passed ? "PASS" : "FAIL",
                  outcome.detail.c_str(),
                  !outcome.passed && allowed ? " (allowed failure)" : "");
    emit(line);
  }
  std::snprintf(line, sizeof(line), "%d/%d criteria passed\n", passed, run);
  emit(line);
  return blocking == 0 ? 0 : 1;
}
