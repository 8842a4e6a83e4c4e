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

#include "sagrnn/gradcheck.hpp"

#include <cmath>

namespace sagrnn {

namespace {

double rel_err(double analytic, double numeric) {
  const double denom =
      std::max({std::fabs(analytic), std::fabs(numeric), 1e-12});
  return std::fabs(analytic - numeric) / denom;
}

}  // namespace

double grad_check_multi(
    const std::function<Var(const std::vector<Var>&)>& f,
    const std::vector<Tensor>& xs, size_t arg, double h,
    const std::vector<int64_t>& coords) {
  if (h <= 0.0) throw UsageError("grad_check: step h must be positive");

  std::vector<Var> leaves;
  leaves.reserve(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    leaves.push_back(make_leaf(xs[i], i == arg, "gradcheck_input"));
  }
  Var loss = f(leaves);
  if (loss->value.numel() != 1) {
    throw UsageError("grad_check: function must be scalar-valued");
  }
  backward(loss);
  Tensor analytic = leaves[arg]->has_grad
                        ? leaves[arg]->grad
                        : Tensor::zeros(xs[arg].shape());

  auto eval_at = [&](const Tensor& perturbed) {
    NoGradGuard no_grad;
    std::vector<Var> args;
    args.reserve(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
      args.push_back(constant(i == arg ? perturbed : xs[i]));
    }
    return f(args)->value.item();
  };

  std::vector<int64_t> all;
  const std::vector<int64_t>* idx = &coords;
  if (coords.empty()) {
    all.resize(static_cast<size_t>(xs[arg].numel()));
    for (int64_t i = 0; i < xs[arg].numel(); ++i) all[i] = i;
    idx = &all;
  }

  double worst = 0.0;
  Tensor work = xs[arg];
  for (int64_t i : *idx) {
    const double saved = work[i];
    work[i] = saved + h;
    const double up = eval_at(work);
    work[i] = saved - h;
    const double down = eval_at(work);
    work[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, rel_err(analytic[i], numeric));
  }
  return worst;
}

double grad_check(const std::function<Var(const Var&)>& f, const Tensor& x,
                  double h, const std::vector<int64_t>& coords) {
  return grad_check_multi(
      [&f](const std::vector<Var>& args) { return f(args[0]); }, {x}, 0, h,
      coords);
}

}  // namespace sagrnn
