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


#ifndef MRCQT_DATASET_H_
#define MRCQT_DATASET_H_

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "mrcqt/config.h"
#include "mrcqt/rng.h"
#include "mrcqt/tensor.h"

// Training data: a manifest of WAV files (or in-memory synthetic clips) and
// uniformly random fixed-length segment selection.
namespace mrcqt {

struct ManifestEntry {
  std::string path;
  std::size_t num_samples = 0;
  double sample_rate = 0.0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::size_t segment_length = 0;
  bool peak_normalize = true;
};

// Lists *.wav files of `dir` in name order. Files shorter than the segment
// are skipped with a warning. Throws FormatError on unreadable files,
// ParameterError on a sample-rate mismatch and when no usable file remains.
DatasetManifest BuildManifest(const std::string& dir,
                              std::size_t segment_length, double sample_rate,
                              bool peak_normalize, std::ostream* warnings);

// In-memory audio clips served as random segments.
class SegmentSource {
 public:
  // Throws ParameterError when no clip is at least segment_length long;
  // shorter clips are skipped with a warning.
  SegmentSource(std::vector<std::vector<double>> clips,
                std::vector<std::string> labels, std::size_t segment_length,
                bool peak_normalize, std::ostream* warnings = nullptr);
  static SegmentSource FromManifest(const DatasetManifest& manifest);

  std::size_t num_clips() const { return clips_.size(); }
  std::size_t segment_length() const { return segment_length_; }
  const std::vector<double>& clip(std::size_t i) const { return clips_[i]; }
  const std::string& label(std::size_t i) const { return labels_[i]; }

  struct Pick {
    std::size_t clip = 0;
    std::size_t offset = 0;
  };
  // Uniform clip, then uniform offset in [0, length - segment_length].
  Pick Draw(Rng& rng) const;
  // The (optionally peak-normalized) segment at a pick.
  std::vector<double> Segment(const Pick& pick) const;
  std::vector<Tensor> NextBatch(std::size_t batch_size, Rng& rng) const;

 private:
  std::vector<std::vector<double>> clips_;
  std::vector<std::string> labels_;
  std::size_t segment_length_;
  bool peak_normalize_;
};

// x / max|x|; all-zero input is returned unchanged.
void PeakNormalize(std::vector<double>& x);

// Synthetic two-tone segments (see SyntheticConfig), deterministic in seed.
std::vector<std::vector<double>> MakeTwoToneSegments(
    const SyntheticConfig& config, std::size_t length, double sample_rate);

// The training data a run config describes.
SegmentSource LoadTrainingData(const RunConfig& config,
                               std::ostream* warnings);

}  // namespace mrcqt

#endif  // MRCQT_DATASET_H_
