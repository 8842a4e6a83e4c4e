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

#include "sagrnn/gradcheck_suite.hpp"

#include <cmath>

#include "sagrnn/binaural_sim.hpp"
#include "sagrnn/gradcheck.hpp"
#include "sagrnn/loss.hpp"
#include "sagrnn/model.hpp"
#include "sagrnn/trainer.hpp"

namespace sagrnn {

namespace {

constexpr double kTol = 1e-4;

Tensor rnd(Shape shape, Rng& rng, double scale = 1.0) {
  return Tensor::uniform(std::move(shape), -scale, scale, rng);
}

GradCheckRow row(const std::string& name, double err, double tol = kTol) {
  return {name, err, tol, err < tol};
}

LstmParams rnd_lstm(int64_t in, int64_t hid, Rng& rng) {
  return {make_leaf(rnd({4 * hid, in}, rng, 0.5), true),
          make_leaf(rnd({4 * hid, hid}, rng, 0.5), true),
          make_leaf(rnd({4 * hid}, rng, 0.5), true)};
}

// Gradient of the full tiny-config network loss w.r.t. sampled parameter
// coordinates, via parameter-vector perturbation.
double full_model_check(int64_t coords_to_sample) {
  const uint64_t seed = 20260810;
  ModelConfig cfg;
  cfg.frame_size = 8;
  cfg.channels = 16;
  cfg.chunk_size = 14;
  cfg.hidden = 8;
  cfg.attention_dim = 8;
  cfg.num_blocks = 2;
  cfg.num_speakers = 2;
  cfg.mode = ModelMode::kMimo;

  SceneSpec spec;
  spec.duration_s = 0.2;
  spec.speaker_azimuths_deg = {-35.0, 50.0};
  spec.seed = 404;
  const SceneTruth scene = make_scene(spec);
  const int64_t t = scene.mixture.length();
  Tensor ref({2, 2, t});
  for (int64_t k = 0; k < 2; ++k) {
    std::copy(scene.references[k].left.begin(),
              scene.references[k].left.end(), ref.data() + (k * 2 + 0) * t);
    std::copy(scene.references[k].right.begin(),
              scene.references[k].right.end(), ref.data() + (k * 2 + 1) * t);
  }
  const Tensor left({t}, scene.mixture.left);
  const Tensor right({t}, scene.mixture.right);
  const LossConfig loss_cfg;

  auto loss_of = [&](SagrnnParams& params) {
    auto blocks = mimo_forward(constant(left), constant(right), params);
    return multi_scale_loss(blocks, constant(ref), loss_cfg);
  };

  SagrnnParams params = init_sagrnn(cfg, seed);
  Var loss = loss_of(params);
  backward(loss);

  // Sample (parameter, coordinate) pairs.
  Rng pick(derive_seed(seed, 0xc00dd));
  const auto& items = params.store.items();
  double worst = 0.0;
  // Slope differences below ~1e-8 are indistinguishable from the
  // rounding of the O(1) loss evaluation at h = 1e-5, so the relative
  // error uses a denominator floor of 1e-8 / 1e-4; coordinates whose
  // gradients carry real signal are held to the full 1e-4 bar.
  constexpr double kDenomFloor = 1e-4;
  for (int64_t s = 0; s < coords_to_sample; ++s) {
    const size_t p = pick() % items.size();
    Var param = items[p].second;
    const int64_t i = static_cast<int64_t>(pick() % param->value.numel());
    const double analytic = param->has_grad ? param->grad[i] : 0.0;

    const double saved = param->value[i];
    auto numeric_at = [&](double h) {
      NoGradGuard no_grad;
      param->value[i] = saved + h;
      const double up = loss_of(params)->value.item();
      param->value[i] = saved - h;
      const double down = loss_of(params)->value.item();
      param->value[i] = saved;
      return (up - down) / (2.0 * h);
    };
    auto rel = [&](double numeric) {
      return std::fabs(analytic - numeric) /
             std::max({std::fabs(analytic), std::fabs(numeric), kDenomFloor});
    };

    double err = rel(numeric_at(1e-5));
    if (err >= kTol) {
      // The difference quotient's own truncation can exceed the
      // tolerance through deep recurrences; verify against the tighter
      // oracle before judging.
      err = rel(numeric_at(1e-6));
    }
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace

std::vector<GradCheckRow> run_gradcheck_suite() {
  std::vector<GradCheckRow> rows;
  Rng rng(0xabcdef);

  {
    Tensor a = rnd({3, 4}, rng), b = rnd({4, 2}, rng);
    auto f = [](const std::vector<Var>& v) { return sum(matmul(v[0], v[1])); };
    rows.push_back(row("matmul", std::max(grad_check_multi(f, {a, b}, 0),
                                          grad_check_multi(f, {a, b}, 1))));
  }
  {
    Tensor x = rnd({24}, rng), k = rnd({3, 4}, rng);
    auto f = [](const std::vector<Var>& v) {
      Var y = conv1d(v[0], v[1], 2);
      return sum(mul(y, y));
    };
    rows.push_back(row("conv1d", std::max(grad_check_multi(f, {x, k}, 0),
                                          grad_check_multi(f, {x, k}, 1))));
  }
  {
    Tensor x = rnd({3, 4, 5}, rng), w = rnd({2, 3}, rng), b = rnd({2}, rng);
    auto f = [](const std::vector<Var>& v) {
      Var y = pointwise_linear(v[0], v[1], v[2]);
      return sum(mul(y, y));
    };
    double err = 0.0;
    for (size_t arg = 0; arg < 3; ++arg) {
      err = std::max(err, grad_check_multi(f, {x, w, b}, arg));
    }
    rows.push_back(row("pointwise_linear", err));
  }
  {
    Tensor x = rnd({4, 5}, rng, 2.0);
    auto f = [](const Var& v) {
      Var y = softmax(v, 1);
      return sum(mul(y, y));
    };
    rows.push_back(row("softmax", grad_check(f, x)));
  }
  {
    Tensor x = rnd({12}, rng, 2.0);
    double err = grad_check(
        [](const Var& v) { return sum(mul(relu(v), relu(v))); }, x);
    err = std::max(err,
                   grad_check([](const Var& v) { return sum(sigmoid(v)); }, x));
    err = std::max(
        err, grad_check([](const Var& v) { return sum(tanh_op(v)); }, x));
    Tensor slopes = rnd({3}, rng, 0.4);
    Tensor xc = rnd({3, 5}, rng);
    auto fp = [](const std::vector<Var>& v) {
      Var y = prelu(v[0], v[1]);
      return sum(mul(y, y));
    };
    err = std::max(err, grad_check_multi(fp, {xc, slopes}, 0));
    err = std::max(err, grad_check_multi(fp, {xc, slopes}, 1));
    rows.push_back(row("activations", err));
  }
  {
    Tensor x = rnd({2, 3, 4}, rng);
    auto f = [](const Var& v) {
      Var y = permute(v, {2, 0, 1});
      Var z = narrow(reshape(y, {4, 6}), 1, 1, 4);
      return sum(mul(z, z));
    };
    rows.push_back(row("permute/reshape/narrow", grad_check(f, x)));
  }
  {
    Tensor u = rnd({2, 11}, rng);
    auto f = [](const Var& v) {
      Var w = chunk(v, 6);
      return sum(mul(merge_chunks(mul(w, w), 11), v));
    };
    rows.push_back(row("chunk/merge_chunks", grad_check(f, u)));
  }
  {
    Tensor frames = rnd({4, 5}, rng);
    auto f = [](const Var& v) {
      Var y = overlap_add_frames(v, 2, 11);
      return sum(mul(y, y));
    };
    rows.push_back(row("overlap_add", grad_check(f, frames)));
  }
  {
    const int64_t in = 3, hid = 2;
    LstmParams p = rnd_lstm(in, hid, rng);
    Tensor x = rnd({in}, rng), h0 = rnd({hid}, rng), c0 = rnd({hid}, rng);
    auto f = [](const std::vector<Var>& v) {
      LstmParams p{v[3], v[4], v[5]};
      auto [h, c] = lstm_step(v[0], v[1], v[2], p);
      return sum(add(mul(h, h), mul(c, c)));
    };
    std::vector<Tensor> args{x, h0, c0, p.w_ih->value, p.w_hh->value,
                             p.bias->value};
    double err = 0.0;
    for (size_t arg = 0; arg < args.size(); ++arg) {
      err = std::max(err, grad_check_multi(f, args, arg, 1e-5));
    }
    rows.push_back(row("lstm_step", err, 1e-4));
  }
  {
    const int64_t in = 3, hid = 2, m = 5;
    LstmParams fwd = rnd_lstm(in, hid, rng);
    LstmParams bwd = rnd_lstm(in, hid, rng);
    Tensor x = rnd({m, in}, rng);
    auto f = [&](const Var& v) {
      Var y = blstm(v, fwd, bwd);
      return sum(mul(y, y));
    };
    double err = grad_check(f, x);
    // And through the recurrent weights.
    auto fw = [&](const std::vector<Var>& v) {
      LstmParams f2{v[1], v[2], v[3]};
      Var y = blstm(v[0], f2, bwd);
      return sum(mul(y, y));
    };
    std::vector<Tensor> args{x, fwd.w_ih->value, fwd.w_hh->value,
                             fwd.bias->value};
    for (size_t arg = 1; arg < args.size(); ++arg) {
      err = std::max(err, grad_check_multi(fw, args, arg));
    }
    rows.push_back(row("blstm", err));
  }
  {
    const int64_t m = 4, n = 3, d = 2;
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
    Tensor z = rnd({m, n}, rng);
    auto f = [&](const Var& v) {
      Var y = self_attention(v, p);
      return sum(mul(y, y));
    };
    rows.push_back(row("self_attention", grad_check(f, z)));
  }
  {
    const int64_t n = 3, hid = 2;
    SubblockParams p;
    p.lstm1_fwd = rnd_lstm(n, hid, rng);
    p.lstm1_bwd = rnd_lstm(n, hid, rng);
    p.lstm2_fwd = rnd_lstm(n, hid, rng);
    p.lstm2_bwd = rnd_lstm(n, hid, rng);
    p.w_out = make_leaf(rnd({n, 2 * hid + n}, rng, 0.5), true);
    p.b_out = make_leaf(rnd({n}, rng, 0.5), true);
    Tensor x = rnd({4, n}, rng);
    auto f = [&](const Var& v) {
      Var y = subblock(v, p);
      return sum(mul(y, y));
    };
    rows.push_back(row("gated_rnn/subblock", grad_check(f, x)));
  }
  {
    Tensor est = rnd({2, 18}, rng);
    Tensor ref = rnd({2, 18}, rng);
    LossConfig cfg;
    auto f = [&cfg](const std::vector<Var>& v) {
      return pit_assign(v[0], v[1], cfg).loss;
    };
    double err = grad_check_multi(f, {est, ref}, 0);
    LossConfig si;
    si.objective = Objective::kSiSnr;
    auto g = [&si](const std::vector<Var>& v) {
      return pit_assign(v[0], v[1], si).loss;
    };
    err = std::max(err, grad_check_multi(g, {est, ref}, 0));
    rows.push_back(row("pit_loss (snr, si_snr)", err));
  }
  rows.push_back(
      row("full tiny-config loss (25 coords)", full_model_check(25)));
  return rows;
}

}  // namespace sagrnn
