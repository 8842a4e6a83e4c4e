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

#ifndef SAGRNN_OPTIM_HPP_
#define SAGRNN_OPTIM_HPP_

#include <vector>

#include "sagrnn/layers.hpp"

namespace sagrnn {

// Global l2 clipping over all parameter gradients in `store`; gradients
// are scaled in place when the norm exceeds max_norm. Returns the scale
// applied (1 when untouched). Missing grads count as zeros.
double clip_grad_norm(const ParamStore& store, double max_norm = 3.0);

// 0.0002 decayed by 0.98 every 2 epochs.
double lr_at(int64_t epoch, double base_lr = 2e-4, double decay = 0.98,
             int64_t every = 2);

// AMSGrad with bias correction. v_max is elementwise non-decreasing; the
// step counter increments once per step().
class AmsGrad {
 public:
  explicit AmsGrad(const ParamStore& store, double beta1 = 0.9,
                   double beta2 = 0.999, double stability = 1e-8);

  // Applies one update from the accumulated grads (missing grad = zero),
  // then leaves grads untouched (callers zero them per training step).
  void step(double lr);

  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }

  // Per-parameter state in store order; exposed for checkpointing.
  struct Slot {
    Tensor m, v, v_max;
  };
  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }

 private:
  std::vector<std::pair<std::string, Var>> params_;
  std::vector<Slot> slots_;
  double beta1_, beta2_, stability_;
  int64_t t_ = 0;
};

}  // namespace sagrnn

#endif  // SAGRNN_OPTIM_HPP_
