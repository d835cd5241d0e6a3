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


#include "mrcqt/grad_suite.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mrcqt/cqt.h"
#include "mrcqt/cqt_ops.h"
#include "mrcqt/diffusion.h"
#include "mrcqt/gradcheck.h"
#include "mrcqt/net.h"
#include "mrcqt/ops.h"
#include "mrcqt/rng.h"
#include "mrcqt/trainer.h"

namespace mrcqt {
namespace {

constexpr double kOpTolerance = 1e-4;
constexpr double kEndToEndTolerance = 1e-3;
constexpr double kAdjointTolerance = 1e-8;

std::vector<double> Noise(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& e : v) e = scale * rng.Normal();
  return v;
}

Tensor Leaf(Shape shape, Rng& rng, double scale = 1.0) {
  const std::size_t n = ShapeSize(shape);
  return Tensor::FromData(std::move(shape), Noise(n, rng, scale), true);
}

// Weighted sum so every output element gets a distinct upstream gradient.
Tensor Probe(const Tensor& y, uint64_t seed) {
  Rng rng(seed);
  return Sum(Mul(y, Tensor::FromData(y.shape(), Noise(y.size(), rng))));
}

double Dot(std::span<const double> a, std::span<const double> b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return static_cast<double>(s);
}

class Suite {
 public:
  Suite(uint64_t seed, const std::function<void(const GradSuiteCase&)>& hook)
      : rng_(seed), hook_(hook) {}

  void Check(const std::string& name, const std::function<Tensor()>& loss,
             std::vector<Tensor> inputs, GradCheckOptions options = {},
             double tol = kOpTolerance) {
    options.tol = tol;
    options.seed = rng_.Index(1u << 30);
    const GradCheckReport report = GradCheck(loss, std::move(inputs), options);
    Add({name, report.max_rel_error, tol, report.passed, report.Describe()});
  }

  void Add(GradSuiteCase c) {
    if (hook_) hook_(c);
    result_.cases.push_back(std::move(c));
  }

  Rng& rng() { return rng_; }
  uint64_t NextSeed() { return rng_.Index(1u << 30); }
  GradSuiteResult Take() { return std::move(result_); }

 private:
  Rng rng_;
  std::function<void(const GradSuiteCase&)> hook_;
  GradSuiteResult result_;
};

void OpCases(Suite& s) {
  Rng& r = s.rng();
  Tensor a = Leaf({3, 4, 5}, r), b = Leaf({3, 4, 5}, r);
  const uint64_t p = s.NextSeed();
  s.Check("op add", [&] { return Probe(Add(a, b), p); }, {a, b});
  s.Check("op sub", [&] { return Probe(Sub(a, b), p); }, {a, b});
  s.Check("op mul", [&] { return Probe(Mul(a, b), p); }, {a, b});
  s.Check("op scale", [&] { return Probe(Scale(a, -1.7), p); }, {a});
  s.Check("op sum", [&] { return Sum(Mul(a, a)); }, {a});
  s.Check("op mean", [&] { return Mean(Mul(a, a)); }, {a});
  s.Check("op mse", [&] { return Mse(a, b); }, {a, b});
  s.Check("op gelu", [&] { return Probe(Gelu(a), p); }, {a});
  s.Check("op reshape", [&] { return Probe(Reshape(a, {12, 5}), p); }, {a});

  Tensor x = Leaf({6, 8}, r), w = Leaf({5, 8}, r), bias = Leaf({5}, r);
  s.Check("op linear", [&] { return Probe(Linear(x, w, bias), p); },
          {x, w, bias});
  Tensor g = Leaf({3, 8, 7}, r);
  Tensor w1 = Leaf({4, 3}, r), b1 = Leaf({4}, r);
  s.Check("op conv1x1", [&] { return Probe(Conv1x1(g, w1, b1), p); },
          {g, w1, b1});
  Tensor wf = Leaf({4, 3, 3}, r);
  for (std::size_t d : {1, 2, 4}) {
    s.Check("op conv_freq_dilated d=" + std::to_string(d),
            [&] { return Probe(ConvFreqDilated(g, wf, d), p); }, {g, wf});
  }
  Tensor wt = Leaf({2, 3, 5}, r);
  s.Check("op conv_time", [&] { return Probe(ConvTime(g, wt), p); }, {g, wt});

  Tensor n = Leaf({4, 3, 6}, r), gain = Leaf({4}, r);
  s.Check("op group_norm",
          [&] { return Probe(GroupNormShiftFree(n, 2, gain), p); }, {n, gain});
  Tensor film = Leaf({4}, r);
  s.Check("op film_scale", [&] { return Probe(FilmScale(n, film), p); },
          {n, film});
  Tensor y = Leaf({4, 5, 6}, r);
  s.Check("op concat", [&] { return Probe(Concat({n, y}, 1), p); }, {n, y});
  s.Check("op split",
          [&] {
            auto parts = Split(y, 1, {2, 3});
            return Add(Probe(parts[0], p), Probe(parts[1], p + 1));
          },
          {y});
  Tensor z = Leaf({2, 8, 6}, r);
  s.Check("op downsample freq", [&] { return Probe(Downsample(z, 1), p); },
          {z});
  s.Check("op downsample time", [&] { return Probe(Downsample(z, 2), p); },
          {z});
  s.Check("op upsample freq", [&] { return Probe(Upsample(z, 1), p); }, {z});
  s.Check("op upsample time", [&] { return Probe(Upsample(z, 2), p); }, {z});
}

void TransformCases(Suite& s, const RunConfig& config) {
  auto cqt = std::make_shared<const MultiResCqt>(config.transform.spec,
                                                 config.transform.signal_length);
  const FilterBank& bank = cqt->bank();
  const CoefficientLayout layout(bank);
  const std::size_t n = config.transform.signal_length;
  Rng& r = s.rng();

  const std::vector<double> x = Noise(n, r);
  const std::vector<double> y = Noise(layout.total, r);
  const double lhs = Dot(PackCoefficients(cqt->Forward(x), bank), y);
  const double rhs = Dot(x, cqt->ForwardVjp(UnpackCoefficients(y, bank)));
  const double e1 = std::abs(lhs - rhs) / std::abs(lhs);
  s.Add({"cqt forward adjoint <Ax, y> = <x, A*y>", e1, kAdjointTolerance,
         e1 < kAdjointTolerance, ""});

  const std::vector<double> c = Noise(layout.total, r);
  const std::vector<double> v = Noise(n, r);
  const double lhs2 = Dot(cqt->Inverse(UnpackCoefficients(c, bank)), v);
  const double rhs2 = Dot(c, PackCoefficients(cqt->InverseVjp(v), bank));
  const double e2 = std::abs(lhs2 - rhs2) / std::abs(lhs2);
  s.Add({"cqt inverse adjoint <Sc, v> = <c, S*v>", e2, kAdjointTolerance,
         e2 < kAdjointTolerance, ""});

  // Both maps are linear, so a large step has no truncation error and keeps
  // cancellation in the long sums small.
  GradCheckOptions opt;
  opt.sample_elements = 40;
  opt.eps = 1e-2;
  Tensor packed = Tensor::FromData({layout.total}, Noise(layout.total, r), true);
  const Tensor weights = Tensor::FromData({n}, Noise(n, r));
  s.Check("op cqt_synthesis",
          [&] { return Sum(Mul(CqtSynthesis(packed, cqt), weights)); },
          {packed}, opt);
  Tensor signal = Tensor::FromData({n}, Noise(n, r), true);
  const Tensor cw = Tensor::FromData({layout.total}, Noise(layout.total, r));
  s.Check("op cqt_analysis",
          [&] { return Sum(Mul(CqtAnalysis(signal, cqt), cw)); }, {signal},
          opt);
}

void DsmCase(Suite& s) {
  Tensor a = Tensor::FromData({1}, {0.3}, true);
  Tensor b = Tensor::FromData({1}, {-0.2}, true);
  // Broadcast-free two-parameter model: F(y) = a * y + b.
  const DenoiserFn f = [&](const Tensor& y, double) {
    const Tensor ones = Tensor::Full({y.size(), 1}, 1.0);
    const Tensor av =
        Reshape(Linear(ones, Reshape(a, {1, 1}), Tensor()), {y.size()});
    const Tensor bv =
        Reshape(Linear(ones, Reshape(b, {1, 1}), Tensor()), {y.size()});
    return Add(Mul(av, y), bv);
  };
  Rng& r = s.rng();
  const Tensor x0 = Tensor::FromData({16}, Noise(16, r, 0.5));
  const Tensor eps = Tensor::FromData({16}, Noise(16, r));
  const Preconditioner pre{0.5};
  s.Check("dsm loss (two-parameter model)",
          [&] {
            return DsmTerm(f, pre, LambdaWeighting::kEdm, x0, eps, 0.7);
          },
          {a, b});
}

void EndToEndCase(Suite& s, const RunConfig& config) {
  MrCqtNet net = BuildNet(config);
  // Zero-initialized output layers would make most gradients vanish.
  Rng& r = s.rng();
  for (auto& [name, p] : net.mutable_params().trainable) {
    for (double& v : p.mutable_data()) v += 0.05 * r.Normal();
  }
  const std::size_t n = net.signal_length();
  Tensor x0 = Tensor::FromData({n}, Noise(n, r, 0.5), true);
  const Tensor eps = Tensor::FromData({n}, Noise(n, r));
  const DenoiserFn f = [&](const Tensor& y, double sigma) {
    return net.Forward(y, sigma);
  };
  GradCheckOptions opt;
  opt.sample_elements = 10;
  opt.directions = 2;
  s.Check("end-to-end waveform -> dsm loss (icqt o unet o cqt)",
          [&] {
            return DsmTerm(f, config.preconditioner, LambdaWeighting::kEdm, x0,
                           eps, 0.4);
          },
          {x0}, opt, kEndToEndTolerance);
  std::vector<Tensor> params;
  for (const auto& [name, p] : net.params().trainable) params.push_back(p);
  s.Check("end-to-end parameters -> dsm loss",
          [&] {
            return DsmTerm(f, config.preconditioner, LambdaWeighting::kEdm, x0,
                           eps, 0.4);
          },
          params, opt, kEndToEndTolerance);
}

}  // namespace

bool GradSuiteResult::passed() const {
  return std::all_of(cases.begin(), cases.end(),
                     [](const GradSuiteCase& c) { return c.passed; });
}

GradSuiteResult RunGradientSuite(
    const RunConfig& config, uint64_t seed,
    const std::function<void(const GradSuiteCase&)>& on_case) {
  Suite suite(seed, on_case);
  OpCases(suite);
  TransformCases(suite, config);
  DsmCase(suite);
  EndToEndCase(suite, config);
  return suite.Take();
}

}  // namespace mrcqt
