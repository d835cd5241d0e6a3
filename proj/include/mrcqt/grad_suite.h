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


#ifndef MRCQT_GRAD_SUITE_H_
#define MRCQT_GRAD_SUITE_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mrcqt/config.h"

// Gradient integrity checks run by the `gradcheck` command: every autodiff
// op against central differences, the transform adjoint identities, the DSM
// loss on a two-parameter model, and the end-to-end waveform -> loss
// gradient through the configured denoiser.
namespace mrcqt {

struct GradSuiteCase {
  std::string name;
  double error = 0.0;  // max relative error
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

struct GradSuiteResult {
  std::vector<GradSuiteCase> cases;
  bool passed() const;
};

// `on_case` is called as each case finishes (for progress output).
GradSuiteResult RunGradientSuite(
    const RunConfig& config, uint64_t seed,
    const std::function<void(const GradSuiteCase&)>& on_case = {});

}  // namespace mrcqt

#endif  // MRCQT_GRAD_SUITE_H_
