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

#include "mrcqt/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "mrcqt/error.h"
#include "mrcqt/rng.h"

namespace mrcqt {
namespace {

constexpr std::size_t kDirectional = std::numeric_limits<std::size_t>::max();
constexpr double kFloorFraction = 1e-3;

double Evaluate(const std::function<Tensor()>& loss) {
  NoGradGuard guard;
  const Tensor value = loss();
  return value.item();
}

void Record(GradCheckReport& report, double analytic, double numeric,
            double floor, std::size_t input, std::size_t index) {
  const double scale =
      std::max({std::abs(analytic), std::abs(numeric), floor,
                std::numeric_limits<double>::min()});
  double err = std::abs(analytic - numeric) / scale;
  if (!std::isfinite(analytic) || !std::isfinite(numeric)) {
    err = std::numeric_limits<double>::infinity();
  }
  ++report.checked;
  if (err > report.max_rel_error || report.checked == 1) {
    report.max_rel_error = err;
    report.worst_input = input;
    report.worst_index = index;
    report.worst_analytic = analytic;
    report.worst_numeric = numeric;
  }
}

}  // namespace

std::string GradCheckReport::Describe() const {
  std::ostringstream os;
  os << (passed ? "ok" : "FAILED") << ": " << checked
     << " probes, max rel err " << max_rel_error << "; worst at input "
     << worst_input;
  if (worst_index == kDirectional) {
    os << " (random direction)";
  } else {
    os << " element " << worst_index;
  }
  os << ": analytic " << worst_analytic << ", numeric " << worst_numeric;
  return os.str();
}

GradCheckReport GradCheck(const std::function<Tensor()>& loss,
                          std::vector<Tensor> inputs,
                          const GradCheckOptions& options) {
  if (inputs.empty()) throw ParameterError("gradcheck: no inputs");
  if (!(options.eps > 0.0)) throw ParameterError("gradcheck: eps must be > 0");

  std::vector<bool> saved_flags;
  for (Tensor& t : inputs) {
    saved_flags.push_back(t.requires_grad());
    t.set_requires_grad(true);
    t.ZeroGrad();
  }
  const Tensor value = loss();
  if (value.size() != 1) {
    throw SizeError("gradcheck: loss must be a single element, got " +
                    ShapeToString(value.shape()));
  }
  Backward(value);

  std::vector<std::vector<double>> analytic;
  std::vector<double> floors;
  for (Tensor& t : inputs) {
    std::vector<double> g(t.size(), 0.0);
    if (!t.grad().empty()) std::copy(t.grad().begin(), t.grad().end(), g.begin());
    double peak = 0.0;
    for (double v : g) peak = std::max(peak, std::abs(v));
    floors.push_back(kFloorFraction * peak);
    analytic.push_back(std::move(g));
    t.ZeroGrad();
  }

  Rng rng(options.seed);
  GradCheckReport report;
  const double eps = options.eps;

  // Element-wise probes.
  std::vector<std::pair<std::size_t, std::size_t>> probes;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < inputs[i].size(); ++j) probes.emplace_back(i, j);
  }
  if (options.sample_elements > 0 && options.sample_elements < probes.size()) {
    // Partial Fisher-Yates with the checkpointable generator.
    for (std::size_t k = 0; k < options.sample_elements; ++k) {
      const std::size_t pick = k + rng.Index(probes.size() - k);
      std::swap(probes[k], probes[pick]);
    }
    probes.resize(options.sample_elements);
  }
  for (const auto& [i, j] : probes) {
    double& x = inputs[i].mutable_data()[j];
    const double original = x;
    x = original + eps;
    const double plus = Evaluate(loss);
    x = original - eps;
    const double minus = Evaluate(loss);
    x = original;
    Record(report, analytic[i][j], (plus - minus) / (2.0 * eps), floors[i], i,
           j);
  }

  // Directional probes perturb every input at once.
  for (std::size_t d = 0; d < options.directions; ++d) {
    std::vector<std::vector<double>> dirs;
    double predicted = 0.0;
    double floor = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::vector<double> v(inputs[i].size());
      for (double& e : v) e = rng.Normal();
      predicted += std::inner_product(v.begin(), v.end(), analytic[i].begin(), 0.0);
      floor += floors[i] * std::sqrt(static_cast<double>(v.size()));
      dirs.push_back(std::move(v));
    }
    auto shift = [&](double step) {
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        std::span<double> x = inputs[i].mutable_data();
        for (std::size_t j = 0; j < x.size(); ++j) x[j] += step * dirs[i][j];
      }
    };
    std::vector<std::vector<double>> originals;
    for (const Tensor& t : inputs) {
      originals.emplace_back(t.data().begin(), t.data().end());
    }
    shift(eps);
    const double plus = Evaluate(loss);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::copy(originals[i].begin(), originals[i].end(),
                inputs[i].mutable_data().begin());
    }
    shift(-eps);
    const double minus = Evaluate(loss);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::copy(originals[i].begin(), originals[i].end(),
                inputs[i].mutable_data().begin());
    }
    Record(report, predicted, (plus - minus) / (2.0 * eps), floor, 0,
           kDirectional);
  }

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    inputs[i].set_requires_grad(saved_flags[i]);
  }
  report.passed = report.max_rel_error < options.tol;
  return report;
}

}  // namespace mrcqt
