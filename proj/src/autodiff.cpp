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

#include "sagrnn/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <unordered_set>

#include "sagrnn/kernels.hpp"

namespace sagrnn {

namespace {

std::atomic<int64_t> g_next_id{1};
thread_local int g_no_grad_depth = 0;

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

void check_axis(const char* op, const Tensor& t, int64_t axis) {
  if (axis < 0 || axis >= t.rank()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for " + shape_str(t.shape()));
  }
}

// Splits a shape into (outer, len, inner) around `axis`.
void axis_strides(const Shape& shape, int64_t axis, int64_t* outer,
                  int64_t* len, int64_t* inner) {
  *outer = 1;
  *inner = 1;
  for (int64_t i = 0; i < axis; ++i) *outer *= shape[i];
  *len = shape[axis];
  for (size_t i = axis + 1; i < shape.size(); ++i) *inner *= shape[i];
}

}  // namespace

void Node::ensure_grad() {
  if (!has_grad) {
    grad = Tensor::zeros(value.shape());
    has_grad = true;
  }
}

void Node::accum_grad(const Tensor& t) { accum_grad(t.data(), t.numel()); }

void Node::accum_grad(const double* src, int64_t n) {
  ensure_grad();
  double* dst = grad.data();
  for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

void Node::clear_grad() {
  grad = Tensor();
  has_grad = false;
}

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

bool grad_enabled() { return g_no_grad_depth == 0; }

Var make_leaf(Tensor value, bool requires_grad, const char* name) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad && grad_enabled();
  node->op = name;
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return node;
}

Var constant(Tensor value) { return make_leaf(std::move(value), false); }

Var make_node(const char* op, Tensor value, std::vector<Var> parents,
              std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& p : parents) {
      if (p->requires_grad) {
        needs = true;
        break;
      }
    }
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward);
  }
  return node;
}

void backward(const Var& loss) {
  if (loss->value.numel() != 1) {
    throw UsageError("backward: root must be a scalar, got shape " +
                     shape_str(loss->value.shape()));
  }
  if (!loss->requires_grad) return;

  // Reachable subgraph, iteratively to keep recursion depth bounded.
  std::vector<Var> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{loss.get()};
  seen.reserve(1024);
  seen.insert(loss.get());
  order.push_back(loss);
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    for (const auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) {
        order.push_back(p);
        stack.push_back(p.get());
      }
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Var& a, const Var& b) { return a->id > b->id; });

  loss->accum_grad(Tensor::ones({1}));
  for (const auto& node : order) {
    if (!node->has_grad) continue;  // no downstream contribution
    if (!node->grad.all_finite()) {
      throw NumericError(std::string("non-finite gradient in op '") +
                         node->op + "'");
    }
    if (node->backward_fn) {
      node->backward_fn(*node);
      // Interior grads are consumed exactly once; free them eagerly.
      node->clear_grad();
    }
  }
}

// ---------------------------------------------------------------------------
// Elementwise binary ops with scalar broadcast.

namespace {

enum class BinKind { kAdd, kSub, kMul, kDiv };

Var binary_op(const char* name, BinKind kind, const Var& a, const Var& b) {
  const Tensor& av = a->value;
  const Tensor& bv = b->value;
  const bool a_scalar = av.numel() == 1 && bv.numel() != 1;
  const bool b_scalar = bv.numel() == 1 && av.numel() != 1;
  if (!a_scalar && !b_scalar) check_same_shape(name, av, bv);

  const int64_t n = std::max(av.numel(), bv.numel());
  Tensor out(a_scalar ? bv.shape() : av.shape());
  const double* pa = av.data();
  const double* pb = bv.data();
  double* po = out.data();
  for (int64_t i = 0; i < n; ++i) {
    const double x = pa[a_scalar ? 0 : i];
    const double y = pb[b_scalar ? 0 : i];
    switch (kind) {
      case BinKind::kAdd: po[i] = x + y; break;
      case BinKind::kSub: po[i] = x - y; break;
      case BinKind::kMul: po[i] = x * y; break;
      case BinKind::kDiv: po[i] = x / y; break;
    }
  }
  return make_node(name, std::move(out), {a, b},
                   [kind, a_scalar, b_scalar, n](Node& self) {
    Var a = self.parents[0];
    Var b = self.parents[1];
    const double* g = self.grad.data();
    const double* pa = a->value.data();
    const double* pb = b->value.data();
    if (a->requires_grad) {
      Tensor da(a->value.shape());
      double* d = da.data();
      for (int64_t i = 0; i < n; ++i) {
        double v = g[i];
        switch (kind) {
          case BinKind::kAdd:
          case BinKind::kSub: break;
          case BinKind::kMul: v *= pb[b_scalar ? 0 : i]; break;
          case BinKind::kDiv: v /= pb[b_scalar ? 0 : i]; break;
        }
        if (a_scalar) {
          d[0] += v;
        } else {
          d[i] = v;
        }
      }
      a->accum_grad(da);
    }
    if (b->requires_grad) {
      Tensor db(b->value.shape());
      double* d = db.data();
      for (int64_t i = 0; i < n; ++i) {
        double v = g[i];
        const double x = pa[a_scalar ? 0 : i];
        const double y = pb[b_scalar ? 0 : i];
        switch (kind) {
          case BinKind::kAdd: break;
          case BinKind::kSub: v = -v; break;
          case BinKind::kMul: v *= x; break;
          case BinKind::kDiv: v *= -x / (y * y); break;
        }
        if (b_scalar) {
          d[0] += v;
        } else {
          d[i] = v;
        }
      }
      b->accum_grad(db);
    }
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary_op("add", BinKind::kAdd, a, b);
}
Var sub(const Var& a, const Var& b) {
  return binary_op("sub", BinKind::kSub, a, b);
}
Var mul(const Var& a, const Var& b) {
  return binary_op("hadamard", BinKind::kMul, a, b);
}
Var vdiv(const Var& a, const Var& b) {
  return binary_op("div", BinKind::kDiv, a, b);
}

Var add_const(const Var& a, double c) {
  Tensor out = a->value;
  for (auto& x : out.vec()) x += c;
  return make_node("add_const", std::move(out), {a}, [](Node& self) {
    self.parents[0]->accum_grad(self.grad);
  });
}

Var mul_const(const Var& a, double c) {
  Tensor out = a->value;
  for (auto& x : out.vec()) x *= c;
  return make_node("mul_const", std::move(out), {a}, [c](Node& self) {
    Tensor da = self.grad;
    for (auto& x : da.vec()) x *= c;
    self.parents[0]->accum_grad(da);
  });
}

Var neg(const Var& a) { return mul_const(a, -1.0); }

// ---------------------------------------------------------------------------
// Matrix products.

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a->value;
  const Tensor& bv = b->value;
  if (av.rank() != 2 || bv.rank() != 2 || av.extent(1) != bv.extent(0)) {
    throw DimensionError("matmul: incompatible shapes " +
                         shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  }
  const int64_t m = av.extent(0), k = av.extent(1), n = bv.extent(1);
  Tensor out({m, n});
  kern::gemm(false, false, m, n, k, av.data(), bv.data(), out.data(), false);
  return make_node("matmul", std::move(out), {a, b}, [m, n, k](Node& self) {
    Var a = self.parents[0];
    Var b = self.parents[1];
    const double* g = self.grad.data();
    if (a->requires_grad) {
      a->ensure_grad();  // dA += dC * B^T
      kern::gemm(false, true, m, k, n, g, b->value.data(), a->grad.data(),
                 true);
    }
    if (b->requires_grad) {
      b->ensure_grad();  // dB += A^T * dC
      kern::gemm(true, false, k, n, m, a->value.data(), g, b->grad.data(),
                 true);
    }
  });
}

Var bmm(const Var& a, const Var& b) {
  const Tensor& av = a->value;
  const Tensor& bv = b->value;
  if (av.rank() != 3 || bv.rank() != 3 || av.extent(0) != bv.extent(0) ||
      av.extent(2) != bv.extent(1)) {
    throw DimensionError("bmm: incompatible shapes " + shape_str(av.shape()) +
                         " x " + shape_str(bv.shape()));
  }
  const int64_t g = av.extent(0), m = av.extent(1), k = av.extent(2),
                n = bv.extent(2);
  Tensor out({g, m, n});
  kern::bgemm(false, false, g, m, n, k, av.data(), bv.data(), out.data(),
              false);
  return make_node("bmm", std::move(out), {a, b}, [g, m, n, k](Node& self) {
    Var a = self.parents[0];
    Var b = self.parents[1];
    const double* dg = self.grad.data();
    if (a->requires_grad) {
      a->ensure_grad();
      kern::bgemm(false, true, g, m, k, n, dg, b->value.data(),
                  a->grad.data(), true);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      kern::bgemm(true, false, g, k, n, m, a->value.data(), dg,
                  b->grad.data(), true);
    }
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  if (xv.rank() < 1 || wv.rank() != 2 ||
      xv.extent(xv.rank() - 1) != wv.extent(1)) {
    throw DimensionError("linear: incompatible shapes " +
                         shape_str(xv.shape()) + " with weight " +
                         shape_str(wv.shape()));
  }
  const int64_t f = wv.extent(1), g = wv.extent(0);
  const int64_t rows = xv.numel() / f;
  if (b && b->value.numel() != g) {
    throw DimensionError("linear: bias length " +
                         std::to_string(b->value.numel()) + " != " +
                         std::to_string(g));
  }
  Shape out_shape = xv.shape();
  out_shape.back() = g;
  Tensor out(out_shape);
  kern::gemm(false, true, rows, g, f, xv.data(), wv.data(), out.data(), false);
  if (b) {
    double* po = out.data();
    const double* pb = b->value.data();
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t j = 0; j < g; ++j) po[r * g + j] += pb[j];
    }
  }
  std::vector<Var> parents{x, w};
  if (b) parents.push_back(b);
  return make_node("linear", std::move(out), std::move(parents),
                   [rows, f, g](Node& self) {
    Var x = self.parents[0];
    Var w = self.parents[1];
    const double* dy = self.grad.data();
    if (x->requires_grad) {
      x->ensure_grad();  // dX += dY * W
      kern::gemm(false, false, rows, f, g, dy, w->value.data(),
                 x->grad.data(), true);
    }
    if (w->requires_grad) {
      w->ensure_grad();  // dW += dY^T * X
      kern::gemm(true, false, g, f, rows, dy, x->value.data(),
                 w->grad.data(), true);
    }
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      Var b = self.parents[2];
      b->ensure_grad();
      kern::col_sums(dy, rows, g, b->grad.data(), true);
    }
  });
}

Var pointwise_linear(const Var& x, const Var& w, const Var& b) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  if (xv.rank() < 1 || wv.rank() != 2 || xv.extent(0) != wv.extent(1)) {
    throw DimensionError("pointwise_linear: leading extent of " +
                         shape_str(xv.shape()) + " must equal weight cols of " +
                         shape_str(wv.shape()));
  }
  const int64_t f = wv.extent(1), g = wv.extent(0);
  const int64_t cols = xv.numel() / f;
  if (b && b->value.numel() != g) {
    throw DimensionError("pointwise_linear: bias length mismatch");
  }
  Shape out_shape = xv.shape();
  out_shape[0] = g;
  Tensor out(out_shape);
  kern::gemm(false, false, g, cols, f, wv.data(), xv.data(), out.data(),
             false);
  if (b) {
    double* po = out.data();
    const double* pb = b->value.data();
    for (int64_t i = 0; i < g; ++i) {
      for (int64_t c = 0; c < cols; ++c) po[i * cols + c] += pb[i];
    }
  }
  std::vector<Var> parents{x, w};
  if (b) parents.push_back(b);
  return make_node("pointwise_linear", std::move(out), std::move(parents),
                   [f, g, cols](Node& self) {
    Var x = self.parents[0];
    Var w = self.parents[1];
    const double* dy = self.grad.data();
    if (x->requires_grad) {
      x->ensure_grad();  // dX += W^T * dY
      kern::gemm(true, false, f, cols, g, w->value.data(), dy,
                 x->grad.data(), true);
    }
    if (w->requires_grad) {
      w->ensure_grad();  // dW += dY * X^T
      kern::gemm(false, true, g, f, cols, dy, x->value.data(),
                 w->grad.data(), true);
    }
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      Var b = self.parents[2];
      b->ensure_grad();
      kern::row_sums(dy, g, cols, b->grad.data(), true);
    }
  });
}

Var conv1d(const Var& x, const Var& kernels, int64_t stride) {
  const Tensor& xv = x->value;
  const Tensor& kv = kernels->value;
  if (xv.rank() != 1 || kv.rank() != 2) {
    throw DimensionError("conv1d: expects x[T], kernels[N x P]");
  }
  const int64_t t = xv.extent(0), n = kv.extent(0), p = kv.extent(1);
  if (stride < 1) throw DimensionError("conv1d: stride must be >= 1");
  if (t < p) {
    throw DimensionError("conv1d: input length " + std::to_string(t) +
                         " shorter than kernel " + std::to_string(p));
  }
  const int64_t l = (t - p) / stride + 1;
  Tensor out({n, l});
  kern::conv1d(xv.data(), t, kv.data(), n, p, stride, out.data(), l);
  return make_node("conv1d", std::move(out), {x, kernels},
                   [t, n, p, stride, l](Node& self) {
    Var x = self.parents[0];
    Var k = self.parents[1];
    const double* dy = self.grad.data();
    if (x->requires_grad) {
      x->ensure_grad();
      kern::conv1d_grad_x(dy, k->value.data(), n, p, stride, l,
                          x->grad.data(), t);
    }
    if (k->requires_grad) {
      k->ensure_grad();
      kern::conv1d_grad_k(dy, x->value.data(), n, p, stride, l,
                          k->grad.data());
    }
  });
}

// ---------------------------------------------------------------------------
// Nonlinearities.

Var softmax(const Var& x, int64_t axis) {
  check_axis("softmax", x->value, axis);
  int64_t outer, len, inner;
  axis_strides(x->value.shape(), axis, &outer, &len, &inner);
  Tensor out(x->value.shape());
  if (inner == 1) {
    kern::softmax_rows(x->value.data(), out.data(), outer, len);
  } else {
    const double* px = x->value.data();
    double* po = out.data();
    for (int64_t o = 0; o < outer; ++o) {
      for (int64_t i = 0; i < inner; ++i) {
        const double* xs = px + o * len * inner + i;
        double* os = po + o * len * inner + i;
        double mx = xs[0];
        for (int64_t j = 1; j < len; ++j)
          mx = std::max(mx, xs[j * inner]);
        double denom = 0.0;
        for (int64_t j = 0; j < len; ++j) {
          os[j * inner] = std::exp(xs[j * inner] - mx);
          denom += os[j * inner];
        }
        for (int64_t j = 0; j < len; ++j) os[j * inner] /= denom;
      }
    }
  }
  return make_node("softmax", std::move(out), {x},
                   [outer, len, inner](Node& self) {
    Var x = self.parents[0];
    if (!x->requires_grad) return;
    const double* y = self.value.data();
    const double* g = self.grad.data();
    Tensor dx(x->value.shape());
    double* d = dx.data();
    for (int64_t o = 0; o < outer; ++o) {
      for (int64_t i = 0; i < inner; ++i) {
        const int64_t base = o * len * inner + i;
        double dot = 0.0;
        for (int64_t j = 0; j < len; ++j) {
          dot += g[base + j * inner] * y[base + j * inner];
        }
        for (int64_t j = 0; j < len; ++j) {
          d[base + j * inner] =
              y[base + j * inner] * (g[base + j * inner] - dot);
        }
      }
    }
    x->accum_grad(dx);
  });
}

namespace {

template <typename Fwd, typename Bwd>
Var unary_op(const char* name, const Var& x, Fwd fwd, Bwd bwd) {
  Tensor out(x->value.shape());
  const double* px = x->value.data();
  double* po = out.data();
  const int64_t n = x->value.numel();
  for (int64_t i = 0; i < n; ++i) po[i] = fwd(px[i]);
  return make_node(name, std::move(out), {x}, [bwd, n](Node& self) {
    Var x = self.parents[0];
    if (!x->requires_grad) return;
    Tensor dx(x->value.shape());
    const double* px = x->value.data();
    const double* py = self.value.data();
    const double* g = self.grad.data();
    double* d = dx.data();
    for (int64_t i = 0; i < n; ++i) d[i] = g[i] * bwd(px[i], py[i]);
    x->accum_grad(dx);
  });
}

}  // namespace

Var relu(const Var& x) {
  return unary_op(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& x) {
  return unary_op(
      "sigmoid", x,
      [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh_op(const Var& x) {
  return unary_op(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var log_op(const Var& x) {
  Var out = unary_op(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
  if (!out->value.all_finite()) {
    throw NumericError("log: non-finite output (non-positive input?)");
  }
  return out;
}

Var prelu(const Var& x, const Var& slopes) {
  const Tensor& xv = x->value;
  const Tensor& sv = slopes->value;
  if (xv.rank() < 1 || sv.numel() != xv.extent(0)) {
    throw DimensionError("prelu: slopes length " +
                         std::to_string(sv.numel()) +
                         " must equal leading extent of " +
                         shape_str(xv.shape()));
  }
  const int64_t ch = xv.extent(0);
  const int64_t inner = xv.numel() / ch;
  Tensor out(xv.shape());
  const double* px = xv.data();
  const double* ps = sv.data();
  double* po = out.data();
  for (int64_t c = 0; c < ch; ++c) {
    for (int64_t i = 0; i < inner; ++i) {
      const double v = px[c * inner + i];
      po[c * inner + i] = v > 0.0 ? v : ps[c] * v;
    }
  }
  return make_node("prelu", std::move(out), {x, slopes},
                   [ch, inner](Node& self) {
    Var x = self.parents[0];
    Var s = self.parents[1];
    const double* px = x->value.data();
    const double* ps = s->value.data();
    const double* g = self.grad.data();
    if (x->requires_grad) {
      Tensor dx(x->value.shape());
      double* d = dx.data();
      for (int64_t c = 0; c < ch; ++c) {
        for (int64_t i = 0; i < inner; ++i) {
          const double v = px[c * inner + i];
          d[c * inner + i] = g[c * inner + i] * (v > 0.0 ? 1.0 : ps[c]);
        }
      }
      x->accum_grad(dx);
    }
    if (s->requires_grad) {
      Tensor ds(s->value.shape());
      double* d = ds.data();
      for (int64_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int64_t i = 0; i < inner; ++i) {
          const double v = px[c * inner + i];
          if (v < 0.0) acc += g[c * inner + i] * v;
        }
        d[c] = acc;
      }
      s->accum_grad(ds);
    }
  });
}

// ---------------------------------------------------------------------------
// Shape plumbing.

Var concat(int64_t axis, const std::vector<Var>& xs) {
  if (xs.empty()) throw UsageError("concat: empty input list");
  const Tensor& first = xs[0]->value;
  check_axis("concat", first, axis);
  Shape out_shape = first.shape();
  int64_t total = 0;
  for (const auto& x : xs) {
    const Tensor& t = x->value;
    if (t.rank() != first.rank()) {
      throw DimensionError("concat: rank mismatch");
    }
    for (int64_t i = 0; i < t.rank(); ++i) {
      if (i != axis && t.extent(i) != first.extent(i)) {
        throw DimensionError("concat: shape mismatch off axis " +
                             std::to_string(axis));
      }
    }
    total += t.extent(axis);
  }
  out_shape[axis] = total;
  Tensor out(out_shape);

  int64_t outer, dummy, inner;
  axis_strides(out_shape, axis, &outer, &dummy, &inner);
  std::vector<int64_t> extents;
  extents.reserve(xs.size());
  for (const auto& x : xs) extents.push_back(x->value.extent(axis));

  double* po = out.data();
  int64_t offset = 0;
  for (size_t s = 0; s < xs.size(); ++s) {
    const double* px = xs[s]->value.data();
    const int64_t len = extents[s];
    for (int64_t o = 0; o < outer; ++o) {
      std::copy(px + o * len * inner, px + (o + 1) * len * inner,
                po + (o * total + offset) * inner);
    }
    offset += len;
  }
  return make_node("concat", std::move(out), xs,
                   [outer, inner, total, extents](Node& self) {
    const double* g = self.grad.data();
    int64_t offset = 0;
    for (size_t s = 0; s < self.parents.size(); ++s) {
      const int64_t len = extents[s];
      Var p = self.parents[s];
      if (p->requires_grad) {
        Tensor dp(p->value.shape());
        double* d = dp.data();
        for (int64_t o = 0; o < outer; ++o) {
          std::copy(g + (o * total + offset) * inner,
                    g + (o * total + offset + len) * inner,
                    d + o * len * inner);
        }
        p->accum_grad(dp);
      }
      offset += len;
    }
  });
}

namespace {

// out[idx] = in[perm applied to idx]; shared by permute fwd/bwd.
void permute_copy(const double* src, const Shape& src_shape,
                  const std::vector<int64_t>& order, double* dst) {
  const int64_t rank = static_cast<int64_t>(src_shape.size());
  Shape dst_shape(rank);
  for (int64_t i = 0; i < rank; ++i) dst_shape[i] = src_shape[order[i]];
  std::vector<int64_t> src_strides(rank, 1);
  for (int64_t i = rank - 2; i >= 0; --i) {
    src_strides[i] = src_strides[i + 1] * src_shape[i + 1];
  }
  // Stride of dst axis i in the source buffer.
  std::vector<int64_t> walk(rank);
  for (int64_t i = 0; i < rank; ++i) walk[i] = src_strides[order[i]];

  const int64_t n = shape_numel(src_shape);
  std::vector<int64_t> idx(rank, 0);
  int64_t src_off = 0;
  for (int64_t flat = 0; flat < n; ++flat) {
    dst[flat] = src[src_off];
    // Odometer increment over dst indices.
    for (int64_t i = rank - 1; i >= 0; --i) {
      src_off += walk[i];
      if (++idx[i] < dst_shape[i]) break;
      src_off -= walk[i] * dst_shape[i];
      idx[i] = 0;
    }
  }
}

}  // namespace

Var permute(const Var& x, const std::vector<int64_t>& order) {
  const Tensor& xv = x->value;
  const int64_t rank = xv.rank();
  if (static_cast<int64_t>(order.size()) != rank) {
    throw DimensionError("permute: order length must equal rank");
  }
  std::vector<bool> used(rank, false);
  for (int64_t o : order) {
    if (o < 0 || o >= rank || used[o]) {
      throw DimensionError("permute: invalid axis order");
    }
    used[o] = true;
  }
  Shape out_shape(rank);
  for (int64_t i = 0; i < rank; ++i) out_shape[i] = xv.extent(order[i]);
  Tensor out(out_shape);
  permute_copy(xv.data(), xv.shape(), order, out.data());

  std::vector<int64_t> inverse(rank);
  for (int64_t i = 0; i < rank; ++i) inverse[order[i]] = i;
  return make_node("permute", std::move(out), {x}, [inverse](Node& self) {
    Var x = self.parents[0];
    if (!x->requires_grad) return;
    Tensor dx(x->value.shape());
    permute_copy(self.grad.data(), self.value.shape(), inverse, dx.data());
    x->accum_grad(dx);
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x->value.reshaped(std::move(shape));
  return make_node("reshape", std::move(out), {x}, [](Node& self) {
    Var x = self.parents[0];
    if (!x->requires_grad) return;
    x->accum_grad(self.grad.data(), self.grad.numel());
  });
}

Var narrow(const Var& x, int64_t axis, int64_t start, int64_t len) {
  const Tensor& xv = x->value;
  check_axis("narrow", xv, axis);
  if (start < 0 || len < 1 || start + len > xv.extent(axis)) {
    throw DimensionError("narrow: range [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of bounds");
  }
  int64_t outer, full, inner;
  axis_strides(xv.shape(), axis, &outer, &full, &inner);
  Shape out_shape = xv.shape();
  out_shape[axis] = len;
  Tensor out(out_shape);
  const double* px = xv.data();
  double* po = out.data();
  for (int64_t o = 0; o < outer; ++o) {
    std::copy(px + (o * full + start) * inner,
              px + (o * full + start + len) * inner, po + o * len * inner);
  }
  return make_node("narrow", std::move(out), {x},
                   [outer, full, inner, start, len](Node& self) {
    Var x = self.parents[0];
    if (!x->requires_grad) return;
    x->ensure_grad();
    const double* g = self.grad.data();
    double* d = x->grad.data();
    for (int64_t o = 0; o < outer; ++o) {
      const double* gs = g + o * len * inner;
      double* ds = d + (o * full + start) * inner;
      for (int64_t i = 0; i < len * inner; ++i) ds[i] += gs[i];
    }
  });
}

Var select(const Var& x, int64_t axis, int64_t index) {
  const Tensor& xv = x->value;
  check_axis("select", xv, axis);
  if (index < 0 || index >= xv.extent(axis)) {
    throw DimensionError("select: index out of range");
  }
  Var slice = narrow(x, axis, index, 1);
  Shape squeezed;
  for (int64_t i = 0; i < xv.rank(); ++i) {
    if (i != axis) squeezed.push_back(xv.extent(i));
  }
  if (squeezed.empty()) squeezed.push_back(1);
  return reshape(slice, squeezed);
}

Var sum(const Var& x) {
  Tensor out = Tensor::scalar(kern::sum_all(x->value.data(), x->value.numel()));
  return make_node("sum", std::move(out), {x}, [](Node& self) {
    Var x = self.parents[0];
    if (!x->requires_grad) return;
    const double g = self.grad[0];
    x->ensure_grad();
    double* d = x->grad.data();
    const int64_t n = x->value.numel();
    for (int64_t i = 0; i < n; ++i) d[i] += g;
  });
}

double scalar_value(const Var& v) { return v->value.item(); }

}  // namespace sagrnn
