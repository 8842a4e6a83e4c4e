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

#include <cmath>
#include <string>
#include <utility>

#include "doctest.h"
#include "sagrnn/autodiff.hpp"
#include "sagrnn/gradcheck.hpp"
#include "sagrnn/rng.hpp"

using namespace sagrnn;

TEST_CASE("backward of sum gives ones") {
  Rng rng(3);
  Var x = make_leaf(Tensor::uniform({3, 4}, -1, 1, rng), true);
  backward(sum(x));
  REQUIRE(x->has_grad);
  for (int64_t i = 0; i < x->grad.numel(); ++i) CHECK(x->grad[i] == 1.0);
}

TEST_CASE("backward of sum of squares gives 2x") {
  Rng rng(5);
  Tensor t = Tensor::uniform({6}, -2, 2, rng);
  Var x = make_leaf(t, true);
  backward(sum(mul(x, x)));
  for (int64_t i = 0; i < t.numel(); ++i) {
    CHECK(x->grad[i] == doctest::Approx(2.0 * t[i]).epsilon(1e-12));
  }
}

TEST_CASE("fan-out accumulates gradients") {
  Var x = make_leaf(Tensor({2}, {3.0, 4.0}), true);
  Var y = add(x, x);  // dy/dx = 2
  backward(sum(y));
  CHECK(x->grad[0] == 2.0);
  CHECK(x->grad[1] == 2.0);
}

TEST_CASE("non-scalar backward root is a usage error") {
  Var x = make_leaf(Tensor::ones({2, 2}), true);
  Var y = add(x, x);
  CHECK_THROWS_AS(backward(y), UsageError);
}

TEST_CASE("non-finite gradient reports the op name") {
  Var x = make_leaf(Tensor({1}, {0.0}), true);
  // d/dx sqrt-ish: log(x) at x -> divides by zero in backward.
  Var y = log_op(add_const(x, 1.0));
  Var z = vdiv(y, x);  // value 0/0 -> NaN in forward already
  CHECK(!z->value.all_finite());
  bool threw = false;
  try {
    backward(sum(z));
  } catch (const NumericError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("op") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("repeated backward accumulates into leaves") {
  Var x = make_leaf(Tensor({2}, {1.0, 2.0}), true);
  backward(sum(x));
  backward(sum(x));
  CHECK(x->grad[0] == 2.0);
  x->clear_grad();
  backward(sum(x));
  CHECK(x->grad[0] == 1.0);
}

TEST_CASE("no-grad mode records no tape") {
  NoGradGuard guard;
  Var x = make_leaf(Tensor::ones({4}), true);
  Var y = mul(x, x);
  CHECK_FALSE(y->requires_grad);
  CHECK(y->parents.empty());
}

TEST_CASE("grad_check on trivial and composite functions") {
  Rng rng(7);
  Tensor x = Tensor::uniform({5}, -1, 1, rng);
  CHECK(grad_check([](const Var& v) { return sum(v); }, x) < 1e-10);

  // softmax-then-sum-of-squares on a random 5-vector.
  auto f = [](const Var& v) {
    Var s = softmax(v, 0);
    return sum(mul(s, s));
  };
  CHECK(grad_check(f, x) < 1e-6);
}

TEST_CASE("grad_check flags a wrong backward rule") {
  // A deliberately broken op: forward x^2, backward pretends d/dx = x.
  auto broken_square = [](const Var& x) {
    Tensor out = x->value;
    for (auto& v : out.vec()) v = v * v;
    return make_node("broken_square", std::move(out), {x}, [](Node& self) {
      Var x = self.parents[0];
      Tensor dx = self.grad;
      for (int64_t i = 0; i < dx.numel(); ++i) dx[i] *= x->value[i];  // wrong
      x->accum_grad(dx);
    });
  };
  Rng rng(9);
  Tensor x = Tensor::uniform({4}, 0.5, 1.5, rng);
  double err =
      grad_check([&](const Var& v) { return sum(broken_square(v)); }, x);
  CHECK(err > 0.1);
}

TEST_CASE("replaying a tape reproduces bit-identical gradients") {
  auto run = [] {
    Rng rng(13);
    Var x = make_leaf(Tensor::uniform({8, 8}, -1, 1, rng), true);
    Var w = make_leaf(Tensor::uniform({8, 8}, -1, 1, rng), true);
    Var loss = sum(mul(matmul(x, w), matmul(x, w)));
    backward(loss);
    return std::make_pair(x->grad, w->grad);
  };
  auto [gx1, gw1] = run();
  auto [gx2, gw2] = run();
  for (int64_t i = 0; i < gx1.numel(); ++i) CHECK(gx1[i] == gx2[i]);
  for (int64_t i = 0; i < gw1.numel(); ++i) CHECK(gw1[i] == gw2[i]);
}
