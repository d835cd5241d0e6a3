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

#ifndef MRCQT_GRADCHECK_H_
#define MRCQT_GRADCHECK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mrcqt/tensor.h"

namespace mrcqt {

struct GradCheckOptions {
  double eps = 1e-6;
  double tol = 1e-4;
  // Number of (input, element) pairs probed by central differences, drawn
  // without replacement across all inputs. 0 probes every element.
  std::size_t sample_elements = 0;
  // Random-direction checks of <grad, v> against the directional derivative.
  std::size_t directions = 3;
  uint64_t seed = 0;
};

struct GradCheckReport {
  bool passed = true;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Worst probe. worst_index is npos for a directional probe.
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  std::string Describe() const;
};

// Compares tape gradients of the scalar `loss` w.r.t. `inputs` with central
// differences. The relative error of a probe is |a - n| / max(|a|, |n|, f)
// where the floor f is 1e-3 of the input's largest gradient entry, so that
// entries that are zero up to rounding are compared on the gradient's scale.
// `loss` is re-evaluated with the inputs perturbed in place; it must rebuild
// its graph on every call.
GradCheckReport GradCheck(const std::function<Tensor()>& loss,
                          std::vector<Tensor> inputs,
                          const GradCheckOptions& options = {});

}  // namespace mrcqt

#endif  // MRCQT_GRADCHECK_H_
