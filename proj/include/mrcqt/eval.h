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


#ifndef MRCQT_EVAL_H_
#define MRCQT_EVAL_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Frechet distance between Gaussian fits of audio embeddings, with a small
// hand-crafted embedder.
namespace mrcqt {

// Embedder layout (version 1), D = 70:
//   [0, 32)   mean over frames of the 32 mel-band log powers (dB, floored)
//   [32, 64)  their standard deviations over frames
//   64, 65    spectral centroid mean / std (fraction of Nyquist)
//   66, 67    85% rolloff mean / std (fraction of Nyquist)
//   68, 69    spectral flatness mean / std
// Frames: periodic Hann, 1024 samples, hop 256. Band power is the unit-sum
// triangular (HTK mel, 40 Hz to Nyquist) average of |X_k|^2 / sum(w^2), so
// unit-variance white noise sits near 0 dB.
inline constexpr std::size_t kMelBands = 32;
inline constexpr std::size_t kEmbeddingDim = 2 * kMelBands + 6;
inline constexpr std::size_t kEmbedFrame = 1024;
inline constexpr std::size_t kEmbedHop = 256;
inline constexpr double kLogFloorDb = -80.0;

// Throws ParameterError for signals shorter than 0.5 s (or one frame).
std::vector<double> EmbedAudio(std::span<const double> signal,
                               double sample_rate);

struct EmbeddingSet {
  Eigen::MatrixXd vectors;  // N x D, one row per example
  std::vector<std::string> labels;
};

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

// Sigma <- (1 - gamma) Sigma + gamma diag(Sigma), applied when N < 10 D or
// the sample covariance is singular.
struct ShrinkageConfig {
  bool enabled = true;
  double gamma = 0.01;
};

// Sample mean and unbiased covariance of the rows. Throws ParameterError for
// fewer than two rows.
GaussianStats FitGaussian(const Eigen::MatrixXd& rows,
                          const ShrinkageConfig& shrinkage = {});

// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2)), where the trace of the
// square root is taken from the symmetric S_a^(1/2) S_b S_a^(1/2) with
// eigenvalues clipped at 0. Throws SizeError on dimension mismatch and
// NumericalError on non-finite input or a failed eigendecomposition.
double FrechetDistance(const GaussianStats& a, const GaussianStats& b);

// M with M M = S_a S_b, as S_a^(1/2) (S_a^(1/2) S_b S_a^(1/2))^(1/2)
// S_a^(-1/2). Requires S_a positive definite (NumericalError otherwise,
// reporting its condition number).
Eigen::MatrixXd SqrtOfProduct(const Eigen::MatrixXd& sigma_a,
                              const Eigen::MatrixXd& sigma_b);

struct FadEntry {
  std::string id;
  // FD of the reference against the generated set without this example.
  double leave_one_out = 0.0;
  // global - leave_one_out: positive when the example raises the FAD.
  double contribution = 0.0;
};

struct FadReport {
  double global_fad = 0.0;
  std::vector<FadEntry> per_example;
  std::string reference;
};

// Throws ParameterError for fewer than 3 examples.
FadReport PerExampleFad(const GaussianStats& reference,
                        const EmbeddingSet& examples,
                        const ShrinkageConfig& shrinkage = {});

}  // namespace mrcqt

#endif  // MRCQT_EVAL_H_
