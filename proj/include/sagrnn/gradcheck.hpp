// Copyright 2026 The SAGRNN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAGRNN_GRADCHECK_HPP_
#define SAGRNN_GRADCHECK_HPP_

#include <functional>
#include <vector>

#include "sagrnn/autodiff.hpp"

namespace sagrnn {

// Compares the reverse-mode gradient of a scalar-valued function against
// central finite differences with step h. Returns the max over checked
// coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
//
// coords selects which coordinates to difference; empty means all.
double grad_check(const std::function<Var(const Var&)>& f, const Tensor& x,
                  double h = 1e-5, const std::vector<int64_t>& coords = {});

// Same check for a function of several inputs, differencing input `arg`.
double grad_check_multi(
    const std::function<Var(const std::vector<Var>&)>& f,
    const std::vector<Tensor>& xs, size_t arg, double h = 1e-5,
    const std::vector<int64_t>& coords = {});

}  // namespace sagrnn

#endif  // SAGRNN_GRADCHECK_HPP_
