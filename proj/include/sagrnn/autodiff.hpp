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
//
// Define-by-run reverse-mode automatic differentiation. Each op records a
// tape node holding the output value, the parent handles, and a closure
// for the local backward rule. Creation order is a topological order of
// the tape, so backward() walks node ids in reverse and visits each node
// exactly once. Single-threaded per tape; kernels may parallelize
// internally without changing results.

#ifndef SAGRNN_AUTODIFF_HPP_
#define SAGRNN_AUTODIFF_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "sagrnn/tensor.hpp"

namespace sagrnn {

class Node;
using Var = std::shared_ptr<Node>;

class Node {
 public:
  Tensor value;
  Tensor grad;  // allocated on first accumulation during backward
  bool requires_grad = false;
  bool has_grad = false;
  const char* op = "leaf";
  int64_t id = 0;
  std::vector<Var> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  // Adds t into grad, allocating on first use.
  void accum_grad(const Tensor& t);
  void accum_grad(const double* src, int64_t n);
  void ensure_grad();
  void clear_grad();
};

// While a guard is alive, ops record no tape structure (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

Var make_leaf(Tensor value, bool requires_grad, const char* name = "leaf");
Var constant(Tensor value);

// Core node factory for ops defined outside this translation unit.
// Drops parents/backward when grads are off or no parent needs them.
Var make_node(const char* op, Tensor value, std::vector<Var> parents,
              std::function<void(Node&)> backward);

// Populates grads of every requires_grad leaf reachable from a scalar
// loss. Gradients accumulate (+=) across fan-out and across repeated
// backward calls; call clear_grad on leaves between steps.
void backward(const Var& loss);

// Elementwise; shapes must match, or one operand may be a scalar
// (1-element tensor) broadcast against the other.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // Hadamard product
Var vdiv(const Var& a, const Var& b);

Var add_const(const Var& a, double c);
Var mul_const(const Var& a, double c);
Var neg(const Var& a);

Var matmul(const Var& a, const Var& b);             // [m x k] x [k x n]
Var bmm(const Var& a, const Var& b);                // [g x m x k] x [g x k x n]
// Rows-as-samples affine map: X[... x F] -> [... x G] via X W^T + b.
// Pass a null bias to skip it.
Var linear(const Var& x, const Var& w, const Var& b);
// Channel-leading affine map: X[F x ...] -> [G x ...] via W X + b,
// applied independently at every trailing-grid position.
Var pointwise_linear(const Var& x, const Var& w, const Var& b);
// x[T] (*) kernels[N x P] with the given stride -> [N x L].
Var conv1d(const Var& x, const Var& kernels, int64_t stride);

Var softmax(const Var& x, int64_t axis);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var tanh_op(const Var& x);
// Leaky map with one learnable slope per leading-axis channel.
Var prelu(const Var& x, const Var& slopes);
Var log_op(const Var& x);

Var concat(int64_t axis, const std::vector<Var>& xs);
Var permute(const Var& x, const std::vector<int64_t>& order);
Var reshape(const Var& x, Shape shape);
// Removes `axis`, keeping the sub-tensor at `index`.
Var select(const Var& x, int64_t axis, int64_t index);
// Keeps `len` entries of `axis` starting at `start`.
Var narrow(const Var& x, int64_t axis, int64_t start, int64_t len);

Var sum(const Var& x);  // total over all elements -> [1]

// Deterministic replacement shortcut used by tests.
double scalar_value(const Var& v);

}  // namespace sagrnn

#endif  // SAGRNN_AUTODIFF_HPP_
