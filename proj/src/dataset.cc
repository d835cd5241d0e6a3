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


#include "mrcqt/dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "mrcqt/error.h"
#include "mrcqt/wav.h"

namespace mrcqt {

namespace fs = std::filesystem;

DatasetManifest BuildManifest(const std::string& dir,
                              std::size_t segment_length, double sample_rate,
                              bool peak_normalize, std::ostream* warnings) {
  if (!fs::is_directory(dir)) {
    throw ParameterError("dataset: '" + dir + "' is not a directory");
  }
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (entry.is_regular_file() && ext == ".wav") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  DatasetManifest manifest;
  manifest.segment_length = segment_length;
  manifest.peak_normalize = peak_normalize;
  for (const std::string& path : paths) {
    const WavFile wav = LoadWav(path);
    if (wav.sample_rate != sample_rate) {
      throw ParameterError("dataset: " + path + " is sampled at " +
                           std::to_string(wav.sample_rate) + " Hz, expected " +
                           std::to_string(sample_rate));
    }
    if (wav.samples.size() < segment_length) {
      if (warnings) {
        *warnings << "warning: skipping " << path << " (" << wav.samples.size()
                  << " samples < segment length " << segment_length << ")\n";
      }
      continue;
    }
    manifest.entries.push_back({path, wav.samples.size(), wav.sample_rate});
  }
  if (manifest.entries.empty()) {
    throw ParameterError("dataset: no usable audio in '" + dir + "'");
  }
  return manifest;
}

SegmentSource::SegmentSource(std::vector<std::vector<double>> clips,
                             std::vector<std::string> labels,
                             std::size_t segment_length, bool peak_normalize,
                             std::ostream* warnings)
    : segment_length_(segment_length), peak_normalize_(peak_normalize) {
  if (segment_length == 0) throw ParameterError("dataset: zero segment length");
  if (labels.size() != clips.size()) {
    throw SizeError("dataset: label count differs from clip count");
  }
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (clips[i].size() < segment_length) {
      if (warnings) {
        *warnings << "warning: skipping " << labels[i] << " ("
                  << clips[i].size() << " samples < segment length "
                  << segment_length << ")\n";
      }
      continue;
    }
    clips_.push_back(std::move(clips[i]));
    labels_.push_back(std::move(labels[i]));
  }
  if (clips_.empty()) throw ParameterError("dataset: empty");
}

SegmentSource SegmentSource::FromManifest(const DatasetManifest& manifest) {
  std::vector<std::vector<double>> clips;
  std::vector<std::string> labels;
  for (const ManifestEntry& e : manifest.entries) {
    clips.push_back(LoadWav(e.path).samples);
    labels.push_back(e.path);
  }
  return SegmentSource(std::move(clips), std::move(labels),
                       manifest.segment_length, manifest.peak_normalize);
}

SegmentSource::Pick SegmentSource::Draw(Rng& rng) const {
  Pick pick;
  pick.clip = rng.Index(clips_.size());
  pick.offset = rng.Index(clips_[pick.clip].size() - segment_length_ + 1);
  return pick;
}

std::vector<double> SegmentSource::Segment(const Pick& pick) const {
  const std::vector<double>& clip = clips_.at(pick.clip);
  if (pick.offset + segment_length_ > clip.size()) {
    throw SizeError("dataset: segment exceeds clip");
  }
  const auto begin = clip.begin() + static_cast<std::ptrdiff_t>(pick.offset);
  std::vector<double> segment(begin,
                              begin + static_cast<std::ptrdiff_t>(segment_length_));
  if (peak_normalize_) PeakNormalize(segment);
  return segment;
}

std::vector<Tensor> SegmentSource::NextBatch(std::size_t batch_size,
                                             Rng& rng) const {
  std::vector<Tensor> batch;
  for (std::size_t b = 0; b < batch_size; ++b) {
    batch.push_back(Tensor::FromData({segment_length_}, Segment(Draw(rng))));
  }
  return batch;
}

void PeakNormalize(std::vector<double>& x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return;
  for (double& v : x) v /= peak;
}

std::vector<std::vector<double>> MakeTwoToneSegments(
    const SyntheticConfig& config, std::size_t length, double sample_rate) {
  Rng rng(config.seed);
  const double log_lo = std::log(config.f_lo);
  const double log_hi = std::log(config.f_hi);
  std::vector<std::vector<double>> out;
  for (std::size_t s = 0; s < config.segments; ++s) {
    std::vector<double> x(length, 0.0);
    for (int tone = 0; tone < 2; ++tone) {
      const double f = std::exp(rng.Uniform(log_lo, log_hi));
      const double phase = rng.Uniform(0.0, 2.0 * std::numbers::pi);
      const double amp = rng.Uniform(0.5, 1.0);
      const double w = 2.0 * std::numbers::pi * f / sample_rate;
      for (std::size_t n = 0; n < length; ++n) {
        x[n] += amp * std::sin(w * static_cast<double>(n) + phase);
      }
    }
    PeakNormalize(x);
    out.push_back(std::move(x));
  }
  return out;
}

SegmentSource LoadTrainingData(const RunConfig& config,
                               std::ostream* warnings) {
  const std::size_t length = config.transform.signal_length;
  const double rate = config.transform.spec.sample_rate();
  if (config.data.source == DataSource::kSynthetic) {
    std::vector<std::vector<double>> clips =
        MakeTwoToneSegments(config.data.synthetic, length, rate);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      labels.push_back("synthetic_" + std::to_string(i));
    }
    return SegmentSource(std::move(clips), std::move(labels), length,
                         config.data.peak_normalize, warnings);
  }
  return SegmentSource::FromManifest(BuildManifest(
      config.data.dir, length, rate, config.data.peak_normalize, warnings));
}

}  // namespace mrcqt
