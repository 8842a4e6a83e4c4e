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
#include <vector>

#include "doctest.h"
#include "sagrnn/gradcheck.hpp"
#include "sagrnn/layers.hpp"
#include "sagrnn/rng.hpp"

using namespace sagrnn;

namespace {

Tensor rnd(Shape shape, Rng& rng, double scale = 1.0) {
  return Tensor::uniform(std::move(shape), -scale, scale, rng);
}

LstmParams lstm_params(const Tensor& w_ih, const Tensor& w_hh,
                       const Tensor& bias) {
  return {make_leaf(w_ih, true), make_leaf(w_hh, true),
          make_leaf(bias, true)};
}

LstmParams zero_lstm(int64_t in, int64_t hidden) {
  return lstm_params(Tensor::zeros({4 * hidden, in}),
                     Tensor::zeros({4 * hidden, hidden}),
                     Tensor::zeros({4 * hidden}));
}

LstmParams random_lstm(int64_t in, int64_t hidden, Rng& rng) {
  return lstm_params(rnd({4 * hidden, in}, rng, 0.5),
                     rnd({4 * hidden, hidden}, rng, 0.5),
                     rnd({4 * hidden}, rng, 0.5));
}

AttentionParams random_attention(int64_t n, int64_t d, Rng& rng) {
  AttentionParams p;
  p.w_q = make_leaf(rnd({d, n}, rng, 0.5), true);
  p.b_q = make_leaf(rnd({d}, rng, 0.5), true);
  p.w_k = make_leaf(rnd({d, n}, rng, 0.5), true);
  p.b_k = make_leaf(rnd({d}, rng, 0.5), true);
  p.w_v = make_leaf(rnd({d, n}, rng, 0.5), true);
  p.b_v = make_leaf(rnd({d}, rng, 0.5), true);
  p.w_merge = make_leaf(rnd({n, d}, rng, 0.5), true);
  p.b_merge = make_leaf(rnd({n}, rng, 0.5), true);
  p.w_fuse = make_leaf(rnd({n, 2 * n}, rng, 0.5), true);
  p.b_fuse = make_leaf(rnd({n}, rng, 0.5), true);
  return p;
}

AttentionParams zero_attention(int64_t n, int64_t d) {
  AttentionParams p;
  p.w_q = constant(Tensor::zeros({d, n}));
  p.b_q = constant(Tensor::zeros({d}));
  p.w_k = constant(Tensor::zeros({d, n}));
  p.b_k = constant(Tensor::zeros({d}));
  p.w_v = constant(Tensor::zeros({d, n}));
  p.b_v = constant(Tensor::zeros({d}));
  p.w_merge = constant(Tensor::zeros({n, d}));
  p.b_merge = constant(Tensor::zeros({n}));
  p.w_fuse = constant(Tensor::zeros({n, 2 * n}));
  p.b_fuse = constant(Tensor::zeros({n}));
  return p;
}

SubblockParams random_subblock(int64_t n, int64_t h, int64_t d, Rng& rng,
                               bool with_attention = true) {
  SubblockParams p;
  if (with_attention) p.attention = random_attention(n, d, rng);
  p.lstm1_fwd = random_lstm(n, h, rng);
  p.lstm1_bwd = random_lstm(n, h, rng);
  p.lstm2_fwd = random_lstm(n, h, rng);
  p.lstm2_bwd = random_lstm(n, h, rng);
  p.w_out = make_leaf(rnd({n, 2 * h + n}, rng, 0.5), true);
  p.b_out = make_leaf(rnd({n}, rng, 0.5), true);
  return p;
}

SubblockParams zero_subblock(int64_t n, int64_t h, int64_t d,
                             bool with_attention) {
  SubblockParams p;
  if (with_attention) p.attention = zero_attention(n, d);
  p.lstm1_fwd = zero_lstm(n, h);
  p.lstm1_bwd = zero_lstm(n, h);
  p.lstm2_fwd = zero_lstm(n, h);
  p.lstm2_bwd = zero_lstm(n, h);
  p.w_out = constant(Tensor::zeros({n, 2 * h + n}));
  p.b_out = constant(Tensor::zeros({n}));
  return p;
}

}  // namespace

TEST_CASE("lstm_step: all-zero parameters and states give zero outputs") {
  LstmParams p = zero_lstm(3, 2);
  auto [h, c] = lstm_step(constant(Tensor::zeros({3})),
                          constant(Tensor::zeros({2})),
                          constant(Tensor::zeros({2})), p);
  for (int64_t i = 0; i < 2; ++i) {
    CHECK(h->value[i] == 0.0);
    CHECK(c->value[i] == 0.0);
  }
}

TEST_CASE("lstm_step: hand-evaluated one-unit cell") {
  // Weights zero; input/forget/output gate biases at 100 (saturated to 1),
  // cell bias 0.5. From zero states: c' = tanh(0.5), h' = tanh(tanh(0.5)).
  Tensor bias({4}, {100.0, 100.0, 0.5, 100.0});  // order (i, f, g, o)
  LstmParams p = lstm_params(Tensor::zeros({4, 1}), Tensor::zeros({4, 1}),
                             bias);
  auto [h, c] = lstm_step(constant(Tensor::zeros({1})),
                          constant(Tensor::zeros({1})),
                          constant(Tensor::zeros({1})), p);
  CHECK(c->value.item() == doctest::Approx(std::tanh(0.5)).epsilon(1e-12));
  CHECK(h->value.item() ==
        doctest::Approx(std::tanh(std::tanh(0.5))).epsilon(1e-12));
}

TEST_CASE("lstm_step gradient vs central differences") {
  Rng rng(211);
  const int64_t in = 3, hid = 2;
  Tensor x = rnd({in}, rng);
  Tensor h0 = rnd({hid}, rng);
  Tensor c0 = rnd({hid}, rng);
  Tensor w_ih = rnd({4 * hid, in}, rng);
  Tensor w_hh = rnd({4 * hid, hid}, rng);
  Tensor bias = rnd({4 * hid}, rng);
  auto f = [](const std::vector<Var>& v) {
    LstmParams p{v[3], v[4], v[5]};
    auto [h, c] = lstm_step(v[0], v[1], v[2], p);
    return sum(add(mul(h, h), mul(c, c)));
  };
  std::vector<Tensor> args{x, h0, c0, w_ih, w_hh, bias};
  for (size_t arg = 0; arg < args.size(); ++arg) {
    CHECK(grad_check_multi(f, args, arg) < 1e-5);
  }
}

TEST_CASE("blstm: length-one sequence equals the single-step outputs") {
  Rng rng(223);
  const int64_t in = 4, hid = 3;
  LstmParams fwd = random_lstm(in, hid, rng);
  LstmParams bwd = random_lstm(in, hid, rng);
  Tensor x = rnd({1, in}, rng);

  Var y = blstm(constant(x), fwd, bwd);
  REQUIRE(y->value.shape() == Shape{1, 2 * hid});

  auto [hf, cf] = lstm_step(constant(x.reshaped({in})),
                            constant(Tensor::zeros({hid})),
                            constant(Tensor::zeros({hid})), fwd);
  auto [hb, cb] = lstm_step(constant(x.reshaped({in})),
                            constant(Tensor::zeros({hid})),
                            constant(Tensor::zeros({hid})), bwd);
  for (int64_t j = 0; j < hid; ++j) {
    CHECK(y->value[j] == doctest::Approx(hf->value[j]).epsilon(1e-14));
    CHECK(y->value[hid + j] == doctest::Approx(hb->value[j]).epsilon(1e-14));
  }
}

TEST_CASE("blstm time-reversal symmetry") {
  Rng rng(227);
  const int64_t in = 3, hid = 2, m = 6;
  LstmParams fwd = random_lstm(in, hid, rng);
  LstmParams bwd = random_lstm(in, hid, rng);
  Tensor x = rnd({m, in}, rng);
  Tensor x_rev({m, in});
  for (int64_t t = 0; t < m; ++t) {
    for (int64_t i = 0; i < in; ++i) {
      x_rev.at({t, i}) = x.at({m - 1 - t, i});
    }
  }
  Var y = blstm(constant(x), fwd, bwd);
  Var y_rev = blstm(constant(x_rev), bwd, fwd);  // swapped direction params
  // y_rev reversed in time with halves swapped must equal y.
  for (int64_t t = 0; t < m; ++t) {
    for (int64_t j = 0; j < hid; ++j) {
      CHECK(y->value.at({t, j}) ==
            y_rev->value.at({m - 1 - t, hid + j}));
      CHECK(y->value.at({t, hid + j}) ==
            y_rev->value.at({m - 1 - t, j}));
    }
  }
}

TEST_CASE("blstm: zero parameters give zero output") {
  Rng rng(229);
  Tensor x = rnd({5, 3}, rng);
  Var y = blstm(constant(x), zero_lstm(3, 2), zero_lstm(3, 2));
  for (int64_t i = 0; i < y->value.numel(); ++i) CHECK(y->value[i] == 0.0);
}

TEST_CASE("blstm batching matches per-slice evaluation") {
  Rng rng(233);
  const int64_t g = 3, m = 5, in = 4, hid = 2;
  LstmParams fwd = random_lstm(in, hid, rng);
  LstmParams bwd = random_lstm(in, hid, rng);
  Tensor x = rnd({g, m, in}, rng);
  Var batched = blstm_batch(constant(x), fwd, bwd);
  for (int64_t s = 0; s < g; ++s) {
    Tensor slice({m, in});
    for (int64_t t = 0; t < m; ++t) {
      for (int64_t i = 0; i < in; ++i) slice.at({t, i}) = x.at({s, t, i});
    }
    Var single = blstm(constant(slice), fwd, bwd);
    for (int64_t t = 0; t < m; ++t) {
      for (int64_t j = 0; j < 2 * hid; ++j) {
        CHECK(batched->value.at({s, t, j}) ==
              doctest::Approx(single->value.at({t, j})).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("self_attention: single key has weight exactly one") {
  Rng rng(239);
  const int64_t n = 5, d = 3;
  AttentionParams p = random_attention(n, d, rng);
  Tensor z = rnd({1, n}, rng);

  Var attn_probs;
  Var y = self_attention_batch(
      reshape(constant(z), {1, 1, n}), p, &attn_probs);
  REQUIRE(attn_probs->value.numel() == 1);
  CHECK(attn_probs->value.item() == 1.0);

  // Manual path: fuse([merge(v), z]).
  Var zc = constant(z);
  Var v = linear(zc, p.w_v, p.b_v);
  Var merged = linear(v, p.w_merge, p.b_merge);
  Var manual = linear(concat(1, {merged, zc}), p.w_fuse, p.b_fuse);
  for (int64_t i = 0; i < n; ++i) {
    CHECK(y->value[i] == doctest::Approx(manual->value[i]).epsilon(1e-13));
  }
}

TEST_CASE("self_attention rows sum to one on random input") {
  Rng rng(241);
  const int64_t m = 9, n = 6, d = 4;
  AttentionParams p = random_attention(n, d, rng);
  Var attn_probs;
  self_attention_batch(constant(rnd({2, m, n}, rng, 2.0)), p, &attn_probs);
  REQUIRE(attn_probs->value.shape() == Shape{2, m, m});
  for (int64_t g = 0; g < 2; ++g) {
    for (int64_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (int64_t j = 0; j < m; ++j) s += attn_probs->value.at({g, i, j});
      CHECK(std::fabs(s - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("self_attention row-permutation equivariance") {
  Rng rng(251);
  const int64_t n = 4, d = 3;
  AttentionParams p = random_attention(n, d, rng);

  // M = 2 with reversal: bit-exact (two-term sums commute).
  Tensor z2 = rnd({2, n}, rng);
  Tensor z2_rev({2, n});
  for (int64_t i = 0; i < n; ++i) {
    z2_rev.at({0, i}) = z2.at({1, i});
    z2_rev.at({1, i}) = z2.at({0, i});
  }
  Var y2 = self_attention(constant(z2), p);
  Var y2r = self_attention(constant(z2_rev), p);
  for (int64_t i = 0; i < n; ++i) {
    CHECK(y2->value.at({0, i}) == y2r->value.at({1, i}));
    CHECK(y2->value.at({1, i}) == y2r->value.at({0, i}));
  }

  // Larger M with a rotation, tolerance-level equality.
  const int64_t m = 7;
  Tensor z = rnd({m, n}, rng);
  Tensor z_rot({m, n});
  for (int64_t t = 0; t < m; ++t) {
    for (int64_t i = 0; i < n; ++i) {
      z_rot.at({t, i}) = z.at({(t + 3) % m, i});
    }
  }
  Var y = self_attention(constant(z), p);
  Var yr = self_attention(constant(z_rot), p);
  for (int64_t t = 0; t < m; ++t) {
    for (int64_t i = 0; i < n; ++i) {
      CHECK(yr->value.at({t, i}) ==
            doctest::Approx(y->value.at({(t + 3) % m, i})).epsilon(1e-12));
    }
  }
}

TEST_CASE("self_attention gradient") {
  Rng rng(257);
  const int64_t m = 4, n = 3, d = 2;
  Tensor z = rnd({m, n}, rng);
  AttentionParams p = random_attention(n, d, rng);
  auto f = [&p](const Var& v) {
    Var y = self_attention(v, p);
    return sum(mul(y, y));
  };
  CHECK(grad_check(f, z, 1e-5) < 1e-4);
}

TEST_CASE("gated_rnn: zeroed second branch annihilates the product") {
  Rng rng(263);
  const int64_t m = 5, n = 4, h = 3;
  SubblockParams p = random_subblock(n, h, 2, rng, false);
  p.lstm2_fwd = zero_lstm(n, h);
  p.lstm2_bwd = zero_lstm(n, h);
  Tensor x = rnd({m, n}, rng);

  Var y = gated_rnn(constant(x), p);
  // G = 0, so output is the projection of [0, X].
  Var manual = linear(concat(1, {constant(Tensor::zeros({m, 2 * h})),
                                 constant(x)}),
                      p.w_out, p.b_out);
  for (int64_t i = 0; i < y->value.numel(); ++i) {
    CHECK(y->value[i] == doctest::Approx(manual->value[i]).epsilon(1e-13));
  }
}

TEST_CASE("gated_rnn output shapes") {
  Rng rng(269);
  const int64_t n = 4, h = 2;
  SubblockParams p = random_subblock(n, h, 2, rng, false);
  for (int64_t m : {1, 5, 14}) {
    Var y = gated_rnn(constant(rnd({m, n}, rng)), p);
    CHECK(y->value.shape() == Shape{m, n});
  }
}

TEST_CASE("gated_rnn gradient through both BLSTMs") {
  Rng rng(271);
  const int64_t m = 3, n = 3, h = 2;
  SubblockParams p = random_subblock(n, h, 2, rng, false);
  Tensor x = rnd({m, n}, rng);
  auto f = [&p](const Var& v) {
    Var y = gated_rnn(v, p);
    return sum(mul(y, y));
  };
  CHECK(grad_check(f, x, 1e-5) < 1e-4);
}

TEST_CASE("subblock: zero interior reduces to the identity skip") {
  const int64_t n = 4, h = 3, d = 2;
  Rng rng(277);
  Tensor x = rnd({7, n}, rng);
  SubblockParams p = zero_subblock(n, h, d, true);
  Var y = subblock(constant(x), p);
  REQUIRE(y->value.shape() == x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y->value[i] == x[i]);
}

TEST_CASE("subblock shape preservation and gradient") {
  Rng rng(281);
  const int64_t n = 3, h = 2, d = 2;
  SubblockParams p = random_subblock(n, h, d, rng);
  Tensor x = rnd({7, n}, rng);
  Var y = subblock(constant(x), p);
  CHECK(y->value.shape() == Shape{7, n});

  Tensor small = rnd({3, n}, rng);
  auto f = [&p](const Var& v) {
    Var out = subblock(v, p);
    return sum(mul(out, out));
  };
  CHECK(grad_check(f, small, 1e-5) < 1e-4);
}

TEST_CASE("sa_mulcat: first block consumes a single input, keeps shape") {
  Rng rng(283);
  const int64_t n = 3, s = 4, r = 6, h = 2, d = 2;
  SaMulcatParams p;
  p.intra = random_subblock(n, h, d, rng);
  p.inter = random_subblock(n, h, d, rng);
  Var x = constant(rnd({n, s, r}, rng));
  Var y = sa_mulcat({x}, p);
  CHECK(y->value.shape() == Shape{n, s, r});
}

TEST_CASE("sa_mulcat: zeroed interiors pass the input through unchanged") {
  Rng rng(293);
  const int64_t n = 3, s = 4, r = 6, h = 2, d = 2;
  SaMulcatParams p;
  p.intra = zero_subblock(n, h, d, true);
  p.inter = zero_subblock(n, h, d, true);
  Tensor x = rnd({n, s, r}, rng);
  Var y = sa_mulcat({constant(x)}, p);
  REQUIRE(y->value.shape() == x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y->value[i] == x[i]);
}

TEST_CASE("sa_mulcat without attention is the plain gated-RNN path") {
  Rng rng(307);
  const int64_t n = 3, s = 3, r = 4, h = 2;
  SaMulcatParams p;
  p.intra = random_subblock(n, h, 2, rng, false);
  p.inter = random_subblock(n, h, 2, rng, false);
  REQUIRE_FALSE(p.intra.attention.has_value());

  Tensor x = rnd({n, s, r}, rng);
  Var y = sa_mulcat({constant(x)}, p);
  // Manual: permute, subblock over S slices, permute, subblock, permute.
  Var manual = permute(
      subblock_batch(
          permute(subblock_batch(permute(constant(x), {1, 2, 0}), p.intra),
                  {1, 0, 2}),
          p.inter),
      {2, 1, 0});
  for (int64_t i = 0; i < x.numel(); ++i) {
    CHECK(y->value[i] == manual->value[i]);
  }
}

TEST_CASE("sa_mulcat dense projection reduces stacked inputs") {
  Rng rng(311);
  const int64_t n = 2, s = 3, r = 4, h = 2, d = 2;
  SaMulcatParams p;
  p.dense_w = make_leaf(rnd({n, 2 * n}, rng), true);
  p.dense_b = make_leaf(rnd({n}, rng), true);
  p.intra = random_subblock(n, h, d, rng);
  p.inter = random_subblock(n, h, d, rng);
  Var a = constant(rnd({n, s, r}, rng));
  Var b = constant(rnd({n, s, r}, rng));
  Var y = sa_mulcat({a, b}, p);
  CHECK(y->value.shape() == Shape{n, s, r});
}

TEST_CASE("lstm_sequence matches the per-step cell in both directions") {
  Rng rng(331);
  const int64_t g = 3, m = 6, in = 4, hid = 2;
  LstmParams p = random_lstm(in, hid, rng);
  Tensor x = rnd({g, m, in}, rng);

  Var pre = linear(constant(x), p.w_ih, p.bias);
  for (bool reverse : {false, true}) {
    Var fused = lstm_sequence(pre, p.w_hh, reverse);

    // Per-step reference with lstm_step on each batch row.
    for (int64_t row = 0; row < g; ++row) {
      Var h = constant(Tensor::zeros({hid}));
      Var c = constant(Tensor::zeros({hid}));
      for (int64_t k = 0; k < m; ++k) {
        const int64_t t = reverse ? m - 1 - k : k;
        Tensor xt({in});
        for (int64_t i = 0; i < in; ++i) xt[i] = x.at({row, t, i});
        auto [hn, cn] = lstm_step(constant(xt), h, c, p);
        h = hn;
        c = cn;
        for (int64_t j = 0; j < hid; ++j) {
          CHECK(fused->value.at({row, t, j}) ==
                doctest::Approx(h->value[j]).epsilon(1e-13));
        }
      }
    }
  }
}

TEST_CASE("layer shapes preserved for M in {1, 2, 14, 142}") {
  Rng rng(337);
  const int64_t n = 4, h = 2, d = 2;
  SubblockParams p = random_subblock(n, h, d, rng);
  for (int64_t m : {1, 2, 14, 142}) {
    Tensor x = rnd({m, n}, rng);
    CHECK(self_attention(constant(x), *p.attention)->value.shape() ==
          Shape{m, n});
    CHECK(gated_rnn(constant(x), p)->value.shape() == Shape{m, n});
    CHECK(subblock(constant(x), p)->value.shape() == Shape{m, n});
  }
}
