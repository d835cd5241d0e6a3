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


#include "mrcqt/eval.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mrcqt/error.h"
#include "mrcqt/spectral.h"

namespace mrcqt {

namespace {

constexpr double kMelLowHz = 40.0;
constexpr double kRolloffFraction = 0.85;
constexpr double kPowerEps = 1e-12;

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Unit-sum triangular weights over the rfft bins, one row per band.
std::vector<std::vector<double>> MelFilters(double sample_rate) {
  const std::size_t bins = kEmbedFrame / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double lo = HzToMel(kMelLowHz), hi = HzToMel(nyquist);
  std::vector<double> edges(kMelBands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(lo + (hi - lo) * static_cast<double>(i) / (kMelBands + 1));
  }
  std::vector<std::vector<double>> filters(kMelBands, std::vector<double>(bins));
  for (std::size_t b = 0; b < kMelBands; ++b) {
    double total = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = sample_rate * static_cast<double>(k) / kEmbedFrame;
      double w = 0.0;
      if (f > edges[b] && f <= edges[b + 1]) {
        w = (f - edges[b]) / (edges[b + 1] - edges[b]);
      } else if (f > edges[b + 1] && f < edges[b + 2]) {
        w = (edges[b + 2] - f) / (edges[b + 2] - edges[b + 1]);
      }
      filters[b][k] = w;
      total += w;
    }
    if (total == 0.0) {
      // Band narrower than a bin: take the bin nearest its center.
      const double center = edges[b + 1] * kEmbedFrame / sample_rate;
      const std::size_t k = std::min(bins - 1, static_cast<std::size_t>(std::lround(center)));
      filters[b][k] = 1.0;
      total = 1.0;
    }
    for (double& w : filters[b]) w /= total;
  }
  return filters;
}

void MeanStd(const std::vector<double>& v, double& mean, double& std_dev) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  std_dev = std::sqrt(sq / static_cast<double>(v.size()));
}

// Symmetric eigendecomposition with a finite-input check.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> Eig(const Eigen::MatrixXd& m,
                                                   const char* what) {
  if (!m.allFinite()) {
    throw NumericalError(std::string("frechet: non-finite ") + what);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) {
    throw NumericalError(std::string("frechet: eigendecomposition of ") + what +
                         " failed");
  }
  return eig;
}

Eigen::MatrixXd PsdSqrt(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& eig) {
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

std::string ConditionReport(const Eigen::VectorXd& eigenvalues) {
  std::ostringstream out;
  out << "eigenvalues in [" << eigenvalues.minCoeff() << ", "
      << eigenvalues.maxCoeff() << "]";
  if (eigenvalues.minCoeff() > 0.0) {
    out << ", condition number " << eigenvalues.maxCoeff() / eigenvalues.minCoeff();
  }
  return out.str();
}

}  // namespace

std::vector<double> EmbedAudio(std::span<const double> signal,
                               double sample_rate) {
  if (!(sample_rate > 0.0)) throw ParameterError("embed: sample rate must be > 0");
  if (static_cast<double>(signal.size()) < 0.5 * sample_rate ||
      signal.size() < kEmbedFrame) {
    throw ParameterError("embed: signal of " + std::to_string(signal.size()) +
                         " samples is shorter than 0.5 s / one frame");
  }
  const std::vector<double> window = MakeWindow({WindowShape::kHann, kEmbedFrame});
  double window_energy = 0.0;
  for (double w : window) window_energy += w * w;
  const auto filters = MelFilters(sample_rate);
  const auto plan = FftPlan::Get(kEmbedFrame);
  const std::size_t bins = kEmbedFrame / 2 + 1;
  const std::size_t frames = 1 + (signal.size() - kEmbedFrame) / kEmbedHop;

  std::vector<std::vector<double>> band_db(kMelBands, std::vector<double>(frames));
  std::vector<double> centroid(frames), rolloff(frames), flatness(frames);
  std::vector<Complex> buffer(kEmbedFrame);
  std::vector<double> power(bins);
  for (std::size_t f = 0; f < frames; ++f) {
    const double* x = signal.data() + f * kEmbedHop;
    for (std::size_t i = 0; i < kEmbedFrame; ++i) buffer[i] = x[i] * window[i];
    plan->Forward(buffer);
    double total = 0.0, weighted = 0.0, log_sum = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      power[k] = std::norm(buffer[k]) / window_energy;
      total += power[k];
      weighted += power[k] * static_cast<double>(k);
      log_sum += std::log(power[k] + kPowerEps);
    }
    for (std::size_t b = 0; b < kMelBands; ++b) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += filters[b][k] * power[k];
      band_db[b][f] = std::max(kLogFloorDb, 10.0 * std::log10(std::max(e, 1e-300)));
    }
    const double last_bin = static_cast<double>(bins - 1);
    centroid[f] = total > 0.0 ? weighted / total / last_bin : 0.0;
    std::size_t k = 0;
    if (total > 0.0) {
      double cumulative = 0.0;
      for (; k + 1 < bins; ++k) {
        cumulative += power[k];
        if (cumulative >= kRolloffFraction * total) break;
      }
    }
    rolloff[f] = static_cast<double>(k) / last_bin;
    const double geometric = std::exp(log_sum / static_cast<double>(bins));
    flatness[f] = geometric / (total / static_cast<double>(bins) + kPowerEps);
  }

  std::vector<double> out(kEmbeddingDim);
  for (std::size_t b = 0; b < kMelBands; ++b) {
    MeanStd(band_db[b], out[b], out[kMelBands + b]);
  }
  MeanStd(centroid, out[2 * kMelBands], out[2 * kMelBands + 1]);
  MeanStd(rolloff, out[2 * kMelBands + 2], out[2 * kMelBands + 3]);
  MeanStd(flatness, out[2 * kMelBands + 4], out[2 * kMelBands + 5]);
  return out;
}

GaussianStats FitGaussian(const Eigen::MatrixXd& rows,
                          const ShrinkageConfig& shrinkage) {
  const Eigen::Index n = rows.rows(), d = rows.cols();
  if (n < 2) {
    throw ParameterError("fit_gaussian: need at least 2 vectors, got " +
                         std::to_string(n));
  }
  GaussianStats stats;
  stats.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - stats.mean.transpose();
  stats.covariance = centered.transpose() * centered / static_cast<double>(n - 1);
  if (!shrinkage.enabled) return stats;
  bool shrink = n < 10 * d;
  if (!shrink) {
    const Eigen::VectorXd ev = Eig(stats.covariance, "covariance").eigenvalues();
    shrink = ev.minCoeff() <= 1e-12 * std::max(ev.maxCoeff(), 1e-300);
  }
  if (shrink) {
    const Eigen::VectorXd diag = stats.covariance.diagonal();
    stats.covariance *= 1.0 - shrinkage.gamma;
    stats.covariance.diagonal() += shrinkage.gamma * diag;
  }
  return stats;
}

double FrechetDistance(const GaussianStats& a, const GaussianStats& b) {
  const Eigen::Index d = a.mean.size();
  if (b.mean.size() != d || a.covariance.rows() != d || a.covariance.cols() != d ||
      b.covariance.rows() != d || b.covariance.cols() != d) {
    throw SizeError("frechet: dimension mismatch (" + std::to_string(d) +
                    " vs " + std::to_string(b.mean.size()) + ")");
  }
  if (!a.mean.allFinite() || !b.mean.allFinite()) {
    throw NumericalError("frechet: non-finite mean");
  }
  const Eigen::MatrixXd root_a = PsdSqrt(Eig(a.covariance, "covariance a"));
  const auto inner = Eig(root_a * b.covariance * root_a, "S_a^1/2 S_b S_a^1/2");
  const double trace_sqrt = inner.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double fd = (a.mean - b.mean).squaredNorm() + a.covariance.trace() +
                    b.covariance.trace() - 2.0 * trace_sqrt;
  if (!std::isfinite(fd)) {
    throw NumericalError("frechet: non-finite result; " +
                         ConditionReport(inner.eigenvalues()));
  }
  return std::max(fd, 0.0);
}

Eigen::MatrixXd SqrtOfProduct(const Eigen::MatrixXd& sigma_a,
                              const Eigen::MatrixXd& sigma_b) {
  const auto eig_a = Eig(sigma_a, "covariance a");
  const Eigen::VectorXd ev = eig_a.eigenvalues();
  if (!(ev.minCoeff() > 1e-14 * ev.maxCoeff())) {
    throw NumericalError("sqrt_of_product: covariance a is singular; " +
                         ConditionReport(ev));
  }
  const Eigen::MatrixXd& v = eig_a.eigenvectors();
  const Eigen::MatrixXd root = v * ev.cwiseSqrt().asDiagonal() * v.transpose();
  const Eigen::MatrixXd inv_root =
      v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  const Eigen::MatrixXd inner = PsdSqrt(Eig(root * sigma_b * root, "inner product"));
  return root * inner * inv_root;
}

FadReport PerExampleFad(const GaussianStats& reference,
                        const EmbeddingSet& examples,
                        const ShrinkageConfig& shrinkage) {
  const Eigen::Index n = examples.vectors.rows();
  if (n < 3) {
    throw ParameterError("per_example_fad: need at least 3 examples, got " +
                         std::to_string(n));
  }
  FadReport report;
  report.global_fad = FrechetDistance(reference, FitGaussian(examples.vectors, shrinkage));
  Eigen::MatrixXd rest(n - 1, examples.vectors.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0) rest.topRows(i) = examples.vectors.topRows(i);
    if (i + 1 < n) rest.bottomRows(n - 1 - i) = examples.vectors.bottomRows(n - 1 - i);
    FadEntry entry;
    entry.id = static_cast<std::size_t>(i) < examples.labels.size()
                   ? examples.labels[static_cast<std::size_t>(i)]
                   : std::to_string(i);
    entry.leave_one_out = FrechetDistance(reference, FitGaussian(rest, shrinkage));
    entry.contribution = report.global_fad - entry.leave_one_out;
    report.per_example.push_back(std::move(entry));
  }
  return report;
}

}  // namespace mrcqt
