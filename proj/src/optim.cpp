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

#include "sagrnn/optim.hpp"

#include <cmath>

namespace sagrnn {

double clip_grad_norm(const ParamStore& store, double max_norm) {
  double norm_sq = 0.0;
  for (const auto& [name, v] : store.items()) {
    if (!v->has_grad) continue;
    for (int64_t i = 0; i < v->grad.numel(); ++i) {
      norm_sq += v->grad[i] * v->grad[i];
    }
  }
  if (!std::isfinite(norm_sq)) {
    throw NumericError("clip_grad_norm: non-finite gradient norm");
  }
  const double norm = std::sqrt(norm_sq);
  if (norm <= max_norm) return 1.0;
  const double scale = max_norm / norm;
  for (const auto& [name, v] : store.items()) {
    if (!v->has_grad) continue;
    for (auto& g : v->grad.vec()) g *= scale;
  }
  return scale;
}

double lr_at(int64_t epoch, double base_lr, double decay, int64_t every) {
  if (epoch < 0) throw UsageError("lr_at: epoch must be >= 0");
  return base_lr * std::pow(decay, static_cast<double>(epoch / every));
}

AmsGrad::AmsGrad(const ParamStore& store, double beta1, double beta2,
                 double stability)
    : params_(store.items()),
      beta1_(beta1),
      beta2_(beta2),
      stability_(stability) {
  slots_.reserve(params_.size());
  for (const auto& [name, v] : params_) {
    Slot s;
    s.m = Tensor::zeros(v->value.shape());
    s.v = Tensor::zeros(v->value.shape());
    s.v_max = Tensor::zeros(v->value.shape());
    slots_.push_back(std::move(s));
  }
}

void AmsGrad::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t p = 0; p < params_.size(); ++p) {
    Var param = params_[p].second;
    Slot& s = slots_[p];
    const bool has_grad = param->has_grad;
    const int64_t n = param->value.numel();
    for (int64_t i = 0; i < n; ++i) {
      const double g = has_grad ? param->grad[i] : 0.0;
      s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
      s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
      if (s.v[i] > s.v_max[i]) s.v_max[i] = s.v[i];
      const double m_hat = s.m[i] / bc1;
      const double v_hat = s.v_max[i] / bc2;
      const double update = lr * m_hat / (std::sqrt(v_hat) + stability_);
      if (!std::isfinite(update)) {
        throw NumericError("amsgrad_step: non-finite update for parameter '" +
                           params_[p].first + "'");
      }
      param->value[i] -= update;
    }
  }
}

}  // namespace sagrnn
