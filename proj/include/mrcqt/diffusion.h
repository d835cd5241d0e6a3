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


#ifndef MRCQT_DIFFUSION_H_
#define MRCQT_DIFFUSION_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mrcqt/rng.h"
#include "mrcqt/tensor.h"

// Score-based diffusion with sigma(tau) = tau: noise schedule, the
// preconditioned score parameterization, denoising score matching and the
// deterministic Heun sampler of the probability-flow ODE.
namespace mrcqt {

struct NoiseScheduleConfig {
  double sigma_max = 8.0;
  double sigma_min = 1e-5;
  double rho = 10.0;
  std::size_t num_steps = 51;

  // Throws ParameterError naming the field.
  void Validate() const;
};

// tau_i = (s_max^(1/rho) + i/(T-1) (s_min^(1/rho) - s_max^(1/rho)))^rho for
// i = 0..T-1, with both endpoints set exactly.
std::vector<double> ScheduleTimes(const NoiseScheduleConfig& config);

// Input/output scalings keeping the network's signals near unit variance.
struct Preconditioner {
  double sigma_data = 0.5;

  double CSkip(double sigma) const;
  double COut(double sigma) const;
  double CIn(double sigma) const;
  static double CNoise(double sigma);
};

// Raw network F(y, sigma), waveform in, waveform out.
using DenoiserFn = std::function<Tensor(const Tensor& y, double sigma)>;

// s = [(c_skip - 1) x + c_out F(c_in x, sigma)] / sigma^2. Throws
// ParameterError unless sigma > 0.
Tensor PreconditionedScore(const DenoiserFn& f, const Preconditioner& pre,
                           const Tensor& x, double sigma);

enum class LambdaWeighting {
  kEdm,          // lambda = sigma^4 / c_out^2: unit-variance inner target
  kInverseCOut,  // lambda = 1 / c_out^2
  kUniform,      // lambda = 1
};

LambdaWeighting ParseLambdaWeighting(const std::string& name);
std::string LambdaWeightingName(LambdaWeighting weighting);
double LambdaWeight(LambdaWeighting weighting, const Preconditioner& pre,
                    double sigma);

// Log-normal training noise levels, clipped to [sigma_min, sigma_max].
struct SigmaSampling {
  double log_mean = -1.2;
  double log_std = 1.2;
  double sigma_min = 1e-5;
  double sigma_max = 8.0;

  double Draw(Rng& rng) const;
};

// One DSM term lambda(sigma) * mean((s(x0 + sigma eps) - (-eps / sigma))^2)
// for a score given directly. Reference form used by tests.
Tensor ScoreDsmTerm(const std::function<Tensor(const Tensor&, double)>& score,
                    const Tensor& x0, const Tensor& eps, double sigma,
                    double lambda);

// The same term for the preconditioned score of F, evaluated through the
// algebraically equal form
//   lambda c_out^2 / sigma^4 * mean((F(c_in x) - (x0 - c_skip x) / c_out)^2),
// which avoids the 1/sigma^2 cancellation at small sigma.
Tensor DsmTerm(const DenoiserFn& f, const Preconditioner& pre,
               LambdaWeighting weighting, const Tensor& x0, const Tensor& eps,
               double sigma);

struct DsmDraw {
  double sigma = 0.0;
  Tensor eps;
};

// Draws sigma then eps ~ N(0, I) (in that order) for one example.
DsmDraw DrawDsmNoise(const SigmaSampling& sampling, std::size_t length,
                     Rng& rng);

// Batch loss: draws noise per example in order and averages the terms.
Tensor DsmLoss(const DenoiserFn& f, const Preconditioner& pre,
               LambdaWeighting weighting, const SigmaSampling& sampling,
               const std::vector<Tensor>& batch, Rng& rng);

// Score callback for sampling: writes s(x, sigma) into `score`.
using ScoreFn = std::function<void(std::span<const double> x, double sigma,
                                   std::span<double> score)>;

// Integrates dx/dtau = -tau s(x, tau) along the schedule in place: Heun
// steps, except a single Euler step into the final tau. Throws
// NumericalError naming the step on a non-finite state.
void HeunIntegrate(const ScoreFn& score, const std::vector<double>& times,
                   std::span<double> x);

// Number of score evaluations HeunIntegrate spends on a schedule.
std::size_t HeunEvaluations(std::size_t num_steps);

// Draws each sample from N(0, tau_0^2 I) in order and integrates it.
std::vector<std::vector<double>> HeunSample(const ScoreFn& score,
                                            const NoiseScheduleConfig& config,
                                            Rng& rng, std::size_t num_samples,
                                            std::size_t length);

// Adapts a network to a ScoreFn (no graph is recorded).
ScoreFn MakeScoreFn(const DenoiserFn& f, const Preconditioner& pre);

}  // namespace mrcqt

#endif  // MRCQT_DIFFUSION_H_
