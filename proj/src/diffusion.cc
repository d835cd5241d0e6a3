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


#include "mrcqt/diffusion.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "mrcqt/error.h"
#include "mrcqt/ops.h"

namespace mrcqt {

namespace {

void RequirePositiveSigma(double sigma, const char* where) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError(std::string(where) +
                         ": sigma must be positive and finite, got " +
                         std::to_string(sigma));
  }
}

Tensor NoiseTensor(std::size_t length, Rng& rng) {
  std::vector<double> v(length);
  for (double& e : v) e = rng.Normal();
  return Tensor::FromData({length}, std::move(v));
}

}  // namespace

void NoiseScheduleConfig::Validate() const {
  if (!(sigma_min > 0.0)) {
    throw ParameterError("schedule.sigma_min must be > 0");
  }
  if (!(sigma_max > sigma_min) || !std::isfinite(sigma_max)) {
    throw ParameterError("schedule.sigma_max must exceed sigma_min");
  }
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw ParameterError("schedule.rho must be > 0");
  }
  if (num_steps < 2) throw ParameterError("schedule.num_steps must be >= 2");
}

std::vector<double> ScheduleTimes(const NoiseScheduleConfig& config) {
  config.Validate();
  const std::size_t n = config.num_steps;
  const double hi = std::pow(config.sigma_max, 1.0 / config.rho);
  const double lo = std::pow(config.sigma_min, 1.0 / config.rho);
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(n - 1);
    times[i] = std::pow(hi + frac * (lo - hi), config.rho);
  }
  times.front() = config.sigma_max;
  times.back() = config.sigma_min;
  return times;
}

double Preconditioner::CSkip(double sigma) const {
  const double d2 = sigma_data * sigma_data;
  return d2 / (sigma * sigma + d2);
}

double Preconditioner::COut(double sigma) const {
  return sigma * sigma_data / std::sqrt(sigma * sigma + sigma_data * sigma_data);
}

double Preconditioner::CIn(double sigma) const {
  return 1.0 / std::sqrt(sigma * sigma + sigma_data * sigma_data);
}

double Preconditioner::CNoise(double sigma) { return std::log(sigma) / 4.0; }

Tensor PreconditionedScore(const DenoiserFn& f, const Preconditioner& pre,
                           const Tensor& x, double sigma) {
  RequirePositiveSigma(sigma, "precondition");
  const double s2 = sigma * sigma;
  const Tensor out = f(Scale(x, pre.CIn(sigma)), sigma);
  if (out.shape() != x.shape()) {
    throw SizeError("precondition: network output " +
                    ShapeToString(out.shape()) + " for input " +
                    ShapeToString(x.shape()));
  }
  return Add(Scale(x, (pre.CSkip(sigma) - 1.0) / s2),
             Scale(out, pre.COut(sigma) / s2));
}

LambdaWeighting ParseLambdaWeighting(const std::string& name) {
  if (name == "edm") return LambdaWeighting::kEdm;
  if (name == "inverse_c_out") return LambdaWeighting::kInverseCOut;
  if (name == "uniform") return LambdaWeighting::kUniform;
  throw ConfigError("trainer.lambda_weighting: unknown value '" + name +
                    "' (edm, inverse_c_out, uniform)");
}

std::string LambdaWeightingName(LambdaWeighting weighting) {
  switch (weighting) {
    case LambdaWeighting::kEdm:
      return "edm";
    case LambdaWeighting::kInverseCOut:
      return "inverse_c_out";
    case LambdaWeighting::kUniform:
      return "uniform";
  }
  return "edm";
}

double LambdaWeight(LambdaWeighting weighting, const Preconditioner& pre,
                    double sigma) {
  const double c_out = pre.COut(sigma);
  switch (weighting) {
    case LambdaWeighting::kEdm: {
      const double s2 = sigma * sigma;
      return s2 * s2 / (c_out * c_out);
    }
    case LambdaWeighting::kInverseCOut:
      return 1.0 / (c_out * c_out);
    case LambdaWeighting::kUniform:
      return 1.0;
  }
  return 1.0;
}

double SigmaSampling::Draw(Rng& rng) const {
  const double sigma = std::exp(log_mean + log_std * rng.Normal());
  return std::clamp(sigma, sigma_min, sigma_max);
}

Tensor ScoreDsmTerm(const std::function<Tensor(const Tensor&, double)>& score,
                    const Tensor& x0, const Tensor& eps, double sigma,
                    double lambda) {
  RequirePositiveSigma(sigma, "dsm_loss");
  const Tensor x = Add(x0, Scale(eps, sigma));
  const Tensor target = Scale(eps, -1.0 / sigma);
  return Scale(Mse(score(x, sigma), target), lambda);
}

Tensor DsmTerm(const DenoiserFn& f, const Preconditioner& pre,
               LambdaWeighting weighting, const Tensor& x0, const Tensor& eps,
               double sigma) {
  RequirePositiveSigma(sigma, "dsm_loss");
  if (x0.shape() != eps.shape()) {
    throw SizeError("dsm_loss: noise " + ShapeToString(eps.shape()) +
                    " for example " + ShapeToString(x0.shape()));
  }
  const Tensor x = Add(x0, Scale(eps, sigma));
  const double c_out = pre.COut(sigma);
  const Tensor target =
      Scale(Sub(x0, Scale(x, pre.CSkip(sigma))), 1.0 / c_out);
  const Tensor out = f(Scale(x, pre.CIn(sigma)), sigma);
  const double s2 = sigma * sigma;
  const double weight =
      LambdaWeight(weighting, pre, sigma) * c_out * c_out / (s2 * s2);
  return Scale(Mse(out, target), weight);
}

DsmDraw DrawDsmNoise(const SigmaSampling& sampling, std::size_t length,
                     Rng& rng) {
  DsmDraw draw;
  draw.sigma = sampling.Draw(rng);
  draw.eps = NoiseTensor(length, rng);
  return draw;
}

Tensor DsmLoss(const DenoiserFn& f, const Preconditioner& pre,
               LambdaWeighting weighting, const SigmaSampling& sampling,
               const std::vector<Tensor>& batch, Rng& rng) {
  if (batch.empty()) throw SizeError("dsm_loss: empty batch");
  Tensor total;
  for (const Tensor& x0 : batch) {
    const DsmDraw draw = DrawDsmNoise(sampling, x0.size(), rng);
    const Tensor eps = Reshape(draw.eps, x0.shape());
    const Tensor term = DsmTerm(f, pre, weighting, x0, eps, draw.sigma);
    total = total.defined() ? Add(total, term) : term;
  }
  return Scale(total, 1.0 / static_cast<double>(batch.size()));
}

void HeunIntegrate(const ScoreFn& score, const std::vector<double>& times,
                   std::span<double> x) {
  if (times.size() < 2) throw ParameterError("heun: need at least 2 times");
  const std::size_t n = x.size();
  std::vector<double> s(n), d(n), xe(n);
  auto check = [&](std::span<const double> v, std::size_t step) {
    for (double e : v) {
      if (!std::isfinite(e)) {
        throw NumericalError("heun: non-finite state at step " +
                             std::to_string(step) + " (tau " +
                             std::to_string(times[step]) + ")");
      }
    }
  };
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double t = times[i], t_next = times[i + 1];
    const double h = t_next - t;
    score(x, t, s);
    for (std::size_t k = 0; k < n; ++k) {
      d[k] = -t * s[k];
      xe[k] = x[k] + h * d[k];
    }
    if (i + 2 == times.size()) {
      // Final step into the smallest tau: Euler only.
      std::copy(xe.begin(), xe.end(), x.begin());
      check(x, i);
      break;
    }
    check(xe, i);
    score(xe, t_next, s);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += 0.5 * h * (d[k] - t_next * s[k]);
    }
    check(x, i);
  }
}

std::size_t HeunEvaluations(std::size_t num_steps) {
  return num_steps < 2 ? 0 : 2 * (num_steps - 1) - 1;
}

std::vector<std::vector<double>> HeunSample(const ScoreFn& score,
                                            const NoiseScheduleConfig& config,
                                            Rng& rng, std::size_t num_samples,
                                            std::size_t length) {
  const std::vector<double> times = ScheduleTimes(config);
  std::vector<std::vector<double>> samples(num_samples);
  for (auto& x : samples) {
    x.resize(length);
    for (double& e : x) e = times.front() * rng.Normal();
    HeunIntegrate(score, times, x);
  }
  return samples;
}

ScoreFn MakeScoreFn(const DenoiserFn& f, const Preconditioner& pre) {
  return [f, pre](std::span<const double> x, double sigma,
                  std::span<double> out) {
    NoGradGuard no_grad;
    const Tensor xt =
        Tensor::FromData({x.size()}, std::vector<double>(x.begin(), x.end()));
    const Tensor s = PreconditionedScore(f, pre, xt, sigma);
    std::copy(s.data().begin(), s.data().end(), out.begin());
  };
}

}  // namespace mrcqt
