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

#include "sagrnn/layers.hpp"

#include <cmath>
#include <memory>

#include "sagrnn/kernels.hpp"

namespace sagrnn {

Var ParamStore::add(const std::string& name, Tensor init) {
  if (find(name)) throw UsageError("duplicate parameter name: " + name);
  Var v = make_leaf(std::move(init), true, "param");
  items_.emplace_back(name, v);
  return v;
}

Var ParamStore::find(const std::string& name) const {
  for (const auto& [n, v] : items_) {
    if (n == name) return v;
  }
  return nullptr;
}

int64_t ParamStore::total_size() const {
  int64_t n = 0;
  for (const auto& [name, v] : items_) n += v->value.numel();
  return n;
}

void ParamStore::zero_grads() const {
  for (const auto& [name, v] : items_) v->clear_grad();
}

// ---------------------------------------------------------------------------
// LSTM

namespace {

struct LstmSaved {
  Tensor gi, gf, gg, go;  // post-activation gates [G x H]
  Tensor tanh_c;          // tanh(c') [G x H]
  Tensor dgp_o;           // pending output-gate preactivation grad
  bool has_dgp_o = false;
};

inline double sigmoid_f(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

std::pair<Var, Var> lstm_step_pre(const Var& pre, const Var& h, const Var& c,
                                  const Var& w_hh) {
  const Tensor& pv = pre->value;
  const Tensor& hv = h->value;
  const Tensor& cv = c->value;
  const Tensor& wv = w_hh->value;
  if (pv.rank() != 2 || hv.rank() != 2 || cv.rank() != 2 || wv.rank() != 2) {
    throw DimensionError("lstm_step: rank mismatch");
  }
  const int64_t g = pv.extent(0);
  const int64_t hid = wv.extent(1);
  if (pv.extent(1) != 4 * hid || wv.extent(0) != 4 * hid ||
      hv.extent(0) != g || hv.extent(1) != hid || cv.extent(0) != g ||
      cv.extent(1) != hid) {
    throw DimensionError("lstm_step: inconsistent shapes");
  }

  // gp = pre + h W_hh^T
  Tensor gp = pv;
  kern::gemm(false, true, g, 4 * hid, hid, hv.data(), wv.data(), gp.data(),
             true);

  auto saved = std::make_shared<LstmSaved>();
  saved->gi = Tensor({g, hid});
  saved->gf = Tensor({g, hid});
  saved->gg = Tensor({g, hid});
  saved->go = Tensor({g, hid});
  saved->tanh_c = Tensor({g, hid});
  Tensor c_new({g, hid});
  Tensor h_new({g, hid});
  for (int64_t r = 0; r < g; ++r) {
    const double* gpr = gp.data() + r * 4 * hid;
    const double* cr = cv.data() + r * hid;
    for (int64_t j = 0; j < hid; ++j) {
      const double gi = sigmoid_f(gpr[j]);
      const double gf = sigmoid_f(gpr[hid + j]);
      const double gg = std::tanh(gpr[2 * hid + j]);
      const double go = sigmoid_f(gpr[3 * hid + j]);
      const double cn = gf * cr[j] + gi * gg;
      const double tc = std::tanh(cn);
      saved->gi.at({r, j}) = gi;
      saved->gf.at({r, j}) = gf;
      saved->gg.at({r, j}) = gg;
      saved->go.at({r, j}) = go;
      saved->tanh_c.at({r, j}) = tc;
      c_new.at({r, j}) = cn;
      h_new.at({r, j}) = go * tc;
    }
  }

  Var c_node = make_node(
      "lstm_cell", std::move(c_new), {pre, h, c, w_hh},
      [saved, g, hid](Node& self) {
        Var pre = self.parents[0];
        Var h_prev = self.parents[1];
        Var c_prev = self.parents[2];
        Var w_hh = self.parents[3];
        const double* dc = self.grad.data();
        const int64_t n = g * hid;

        Tensor dgp({g, 4 * hid});
        double* dg = dgp.data();
        const double* gi = saved->gi.data();
        const double* gf = saved->gf.data();
        const double* gg = saved->gg.data();
        const double* cp = c_prev->value.data();
        const double* dgo =
            saved->has_dgp_o ? saved->dgp_o.data() : nullptr;
        Tensor dcp_t({g, hid});
        double* dcp = dcp_t.data();
        for (int64_t r = 0; r < g; ++r) {
          for (int64_t j = 0; j < hid; ++j) {
            const int64_t idx = r * hid + j;
            const double d = dc[idx];
            const double di = d * gg[idx];
            const double df = d * cp[idx];
            const double dgg = d * gi[idx];
            dcp[idx] = d * gf[idx];
            double* row = dg + r * 4 * hid;
            row[j] = di * gi[idx] * (1.0 - gi[idx]);
            row[hid + j] = df * gf[idx] * (1.0 - gf[idx]);
            row[2 * hid + j] = dgg * (1.0 - gg[idx] * gg[idx]);
            row[3 * hid + j] = dgo ? dgo[idx] : 0.0;
          }
        }
        if (pre->requires_grad) pre->accum_grad(dgp);
        if (h_prev->requires_grad) {
          h_prev->ensure_grad();  // dh += dgp W_hh
          kern::gemm(false, false, g, hid, 4 * hid, dgp.data(),
                     w_hh->value.data(), h_prev->grad.data(), true);
        }
        if (w_hh->requires_grad) {
          w_hh->ensure_grad();  // dW_hh += dgp^T h_prev
          kern::gemm(true, false, 4 * hid, hid, g, dgp.data(),
                     h_prev->value.data(), w_hh->grad.data(), true);
        }
        if (c_prev->requires_grad) c_prev->accum_grad(dcp_t.data(), n);
      });

  Tensor h_out = std::move(h_new);
  Var h_node = make_node(
      "lstm_out", std::move(h_out), {c_node}, [saved, g, hid](Node& self) {
        Var c_node = self.parents[0];
        const double* dh = self.grad.data();
        const double* go = saved->go.data();
        const double* tc = saved->tanh_c.data();
        const int64_t n = g * hid;
        Tensor dc({g, hid});
        saved->dgp_o = Tensor({g, hid});
        saved->has_dgp_o = true;
        double* dcd = dc.data();
        double* dgo = saved->dgp_o.data();
        for (int64_t i = 0; i < n; ++i) {
          dcd[i] = dh[i] * go[i] * (1.0 - tc[i] * tc[i]);
          const double d_out = dh[i] * tc[i];
          dgo[i] = d_out * go[i] * (1.0 - go[i]);
        }
        c_node->accum_grad(dc);
      });
  return {h_node, c_node};
}

std::pair<Var, Var> lstm_step(const Var& x, const Var& h, const Var& c,
                              const LstmParams& p) {
  const bool flat = x->value.rank() == 1;
  Var xb = flat ? reshape(x, {1, x->value.extent(0)}) : x;
  Var hb = flat ? reshape(h, {1, h->value.extent(0)}) : h;
  Var cb = flat ? reshape(c, {1, c->value.extent(0)}) : c;
  Var pre = linear(xb, p.w_ih, p.bias);
  auto [hn, cn] = lstm_step_pre(pre, hb, cb, p.w_hh);
  if (flat) {
    const int64_t hid = p.hidden();
    return {reshape(hn, {hid}), reshape(cn, {hid})};
  }
  return {hn, cn};
}

namespace {

struct LstmSeqSaved {
  // Indexed by original time t; [G x M x H] row-major buffers.
  std::vector<double> gi, gf, gg, go, tanh_c, c_seq;
};

inline void copy_time_slice(const double* src, int64_t g, int64_t m,
                            int64_t width, int64_t t, double* dst) {
  for (int64_t r = 0; r < g; ++r) {
    std::copy(src + (r * m + t) * width, src + (r * m + t + 1) * width,
              dst + r * width);
  }
}

inline void add_into_time_slice(const double* src, int64_t g, int64_t m,
                                int64_t width, int64_t t, double* dst) {
  for (int64_t r = 0; r < g; ++r) {
    for (int64_t j = 0; j < width; ++j) {
      dst[(r * m + t) * width + j] += src[r * width + j];
    }
  }
}

}  // namespace

Var lstm_sequence(const Var& pre, const Var& w_hh, bool reverse) {
  const Tensor& pv = pre->value;
  const Tensor& wv = w_hh->value;
  if (pv.rank() != 3 || wv.rank() != 2) {
    throw DimensionError("lstm_sequence: expects pre[G x M x 4H], w_hh");
  }
  const int64_t g = pv.extent(0), m = pv.extent(1);
  const int64_t hid = wv.extent(1);
  if (pv.extent(2) != 4 * hid || wv.extent(0) != 4 * hid) {
    throw DimensionError("lstm_sequence: hidden size mismatch");
  }

  auto saved = std::make_shared<LstmSeqSaved>();
  const size_t total = static_cast<size_t>(g * m * hid);
  saved->gi.resize(total);
  saved->gf.resize(total);
  saved->gg.resize(total);
  saved->go.resize(total);
  saved->tanh_c.resize(total);
  saved->c_seq.resize(total);

  Tensor out({g, m, hid});
  std::vector<double> h(g * hid, 0.0), c(g * hid, 0.0);
  std::vector<double> gp(g * 4 * hid);
  for (int64_t k = 0; k < m; ++k) {
    const int64_t t = reverse ? m - 1 - k : k;
    copy_time_slice(pv.data(), g, m, 4 * hid, t, gp.data());
    // gp += h W_hh^T
    kern::gemm(false, true, g, 4 * hid, hid, h.data(), wv.data(), gp.data(),
               true);
    for (int64_t r = 0; r < g; ++r) {
      const double* row = gp.data() + r * 4 * hid;
      for (int64_t j = 0; j < hid; ++j) {
        const int64_t idx = (r * m + t) * hid + j;
        const double i_gate = sigmoid_f(row[j]);
        const double f_gate = sigmoid_f(row[hid + j]);
        const double g_gate = std::tanh(row[2 * hid + j]);
        const double o_gate = sigmoid_f(row[3 * hid + j]);
        const double c_new = f_gate * c[r * hid + j] + i_gate * g_gate;
        const double tc = std::tanh(c_new);
        saved->gi[idx] = i_gate;
        saved->gf[idx] = f_gate;
        saved->gg[idx] = g_gate;
        saved->go[idx] = o_gate;
        saved->tanh_c[idx] = tc;
        saved->c_seq[idx] = c_new;
        c[r * hid + j] = c_new;
        h[r * hid + j] = o_gate * tc;
        out.at({r, t, j}) = h[r * hid + j];
      }
    }
  }

  return make_node(
      "lstm_sequence", std::move(out), {pre, w_hh},
      [saved, g, m, hid, reverse](Node& self) {
        Var pre = self.parents[0];
        Var w_hh = self.parents[1];
        const double* d_out = self.grad.data();
        const double* h_out = self.value.data();
        const double* w = w_hh->value.data();

        Tensor dpre_t(pre->value.shape());
        double* dpre = dpre_t.data();
        Tensor dw_t(w_hh->value.shape());

        std::vector<double> dh(g * hid, 0.0), dc(g * hid, 0.0);
        std::vector<double> dgp(g * 4 * hid);
        std::vector<double> h_prev(g * hid), scratch(g * hid);
        for (int64_t k = m - 1; k >= 0; --k) {
          const int64_t t = reverse ? m - 1 - k : k;
          const int64_t t_prev =
              k > 0 ? (reverse ? m - k : k - 1) : -1;
          for (int64_t r = 0; r < g; ++r) {
            for (int64_t j = 0; j < hid; ++j) {
              const int64_t idx = (r * m + t) * hid + j;
              const int64_t flat = r * hid + j;
              const double dht = dh[flat] + d_out[idx];
              const double tc = saved->tanh_c[idx];
              const double o_gate = saved->go[idx];
              const double dct = dc[flat] + dht * o_gate * (1.0 - tc * tc);
              const double c_prev =
                  t_prev >= 0 ? saved->c_seq[(r * m + t_prev) * hid + j]
                              : 0.0;
              const double i_gate = saved->gi[idx];
              const double f_gate = saved->gf[idx];
              const double g_gate = saved->gg[idx];
              const double d_i = dct * g_gate;
              const double d_f = dct * c_prev;
              const double d_g = dct * i_gate;
              const double d_o = dht * tc;
              double* row = dgp.data() + r * 4 * hid;
              row[j] = d_i * i_gate * (1.0 - i_gate);
              row[hid + j] = d_f * f_gate * (1.0 - f_gate);
              row[2 * hid + j] = d_g * (1.0 - g_gate * g_gate);
              row[3 * hid + j] = d_o * o_gate * (1.0 - o_gate);
              dc[flat] = dct * f_gate;
            }
          }
          add_into_time_slice(dgp.data(), g, m, 4 * hid, t, dpre);
          // dh (for the previous step) = dgp W_hh
          std::fill(dh.begin(), dh.end(), 0.0);
          kern::gemm(false, false, g, hid, 4 * hid, dgp.data(), w, dh.data(),
                     true);
          if (t_prev >= 0) {
            copy_time_slice(h_out, g, m, hid, t_prev, h_prev.data());
            // dW_hh += dgp^T h_prev
            kern::gemm(true, false, 4 * hid, hid, g, dgp.data(),
                       h_prev.data(), dw_t.data(), true);
          }
        }
        if (pre->requires_grad) pre->accum_grad(dpre_t);
        if (w_hh->requires_grad) w_hh->accum_grad(dw_t);
      });
}

Var blstm_batch(const Var& x, const LstmParams& fwd, const LstmParams& bwd) {
  const Tensor& xv = x->value;
  if (xv.rank() != 3) throw DimensionError("blstm_batch: expects [G x M x I]");
  const int64_t hid = fwd.hidden();
  if (bwd.hidden() != hid || fwd.input() != xv.extent(2) ||
      bwd.input() != xv.extent(2)) {
    throw DimensionError("blstm_batch: parameter shape mismatch");
  }

  // Input projections for all steps at once, then the fused recurrences.
  Var pre_f = linear(x, fwd.w_ih, fwd.bias);  // [G x M x 4H]
  Var pre_b = linear(x, bwd.w_ih, bwd.bias);
  Var out_f = lstm_sequence(pre_f, fwd.w_hh, /*reverse=*/false);
  Var out_b = lstm_sequence(pre_b, bwd.w_hh, /*reverse=*/true);
  return concat(2, {out_f, out_b});  // [G x M x 2H]
}

Var blstm(const Var& x, const LstmParams& fwd, const LstmParams& bwd) {
  const Tensor& xv = x->value;
  if (xv.rank() != 2) throw DimensionError("blstm: expects [M x I]");
  Var batched = reshape(x, {1, xv.extent(0), xv.extent(1)});
  Var y = blstm_batch(batched, fwd, bwd);
  return reshape(y, {xv.extent(0), 2 * fwd.hidden()});
}

// ---------------------------------------------------------------------------
// Self-attention

Var self_attention_batch(const Var& z, const AttentionParams& p,
                         Var* attn_out) {
  const Tensor& zv = z->value;
  if (zv.rank() != 3) {
    throw DimensionError("self_attention_batch: expects [G x M x N]");
  }
  const int64_t d = p.w_q->value.extent(0);

  Var q = linear(z, p.w_q, p.b_q);  // [G x M x D]
  Var k = linear(z, p.w_k, p.b_k);
  Var v = linear(z, p.w_v, p.b_v);

  Var scores = bmm(q, permute(k, {0, 2, 1}));              // [G x M x M]
  scores = mul_const(scores, 1.0 / std::sqrt(static_cast<double>(d)));
  Var attn = softmax(scores, 2);  // normalize over keys per query row
  if (attn_out) *attn_out = attn;
  Var ctx = bmm(attn, v);                                  // [G x M x D]
  Var merged = linear(ctx, p.w_merge, p.b_merge);          // [G x M x N]
  Var fused = concat(2, {merged, z});                      // [G x M x 2N]
  return linear(fused, p.w_fuse, p.b_fuse);                // [G x M x N]
}

Var self_attention(const Var& z, const AttentionParams& p, Var* attn_out) {
  const Tensor& zv = z->value;
  if (zv.rank() != 2) throw DimensionError("self_attention: expects [M x N]");
  Var batched = reshape(z, {1, zv.extent(0), zv.extent(1)});
  Var y = self_attention_batch(batched, p, attn_out);
  if (attn_out && *attn_out) {
    *attn_out = reshape(*attn_out, {zv.extent(0), zv.extent(0)});
  }
  return reshape(y, zv.shape());
}

// ---------------------------------------------------------------------------
// Gated RNN module and subblock

Var gated_rnn_batch(const Var& x, const SubblockParams& p) {
  Var g1 = blstm_batch(x, p.lstm1_fwd, p.lstm1_bwd);  // [G x M x 2H]
  Var g2 = blstm_batch(x, p.lstm2_fwd, p.lstm2_bwd);
  Var gated = mul(g1, g2);
  Var cat = concat(2, {gated, x});  // [G x M x (2H + N)]
  return linear(cat, p.w_out, p.b_out);
}

Var gated_rnn(const Var& x, const SubblockParams& p) {
  const Tensor& xv = x->value;
  if (xv.rank() != 2) throw DimensionError("gated_rnn: expects [M x N]");
  Var batched = reshape(x, {1, xv.extent(0), xv.extent(1)});
  Var y = gated_rnn_batch(batched, p);
  return reshape(y, xv.shape());
}

Var subblock_batch(const Var& x, const SubblockParams& p) {
  Var inner = p.attention ? self_attention_batch(x, *p.attention) : x;
  return add(gated_rnn_batch(inner, p), x);
}

Var subblock(const Var& x, const SubblockParams& p) {
  const Tensor& xv = x->value;
  if (xv.rank() != 2) throw DimensionError("subblock: expects [M x N]");
  Var batched = reshape(x, {1, xv.extent(0), xv.extent(1)});
  Var y = subblock_batch(batched, p);
  return reshape(y, xv.shape());
}

// ---------------------------------------------------------------------------
// SA-MULCAT block

Var sa_mulcat(const std::vector<Var>& inputs, const SaMulcatParams& p) {
  if (inputs.empty()) throw UsageError("sa_mulcat: no inputs");
  const Shape shape = inputs[0]->value.shape();
  if (shape.size() != 3) {
    throw DimensionError("sa_mulcat: inputs must be [N x S x R]");
  }
  for (const auto& in : inputs) {
    if (in->value.shape() != shape) {
      throw DimensionError("sa_mulcat: inconsistent input shapes");
    }
  }
  Var x = inputs.size() == 1 ? inputs[0] : concat(0, inputs);
  if (p.dense_w) {
    x = pointwise_linear(x, p.dense_w, p.dense_b);  // [bN x S x R] -> [N x S x R]
  } else if (inputs.size() > 1) {
    throw UsageError("sa_mulcat: multiple inputs but no dense projection");
  }
  // Intra-chunk: S slices, each an R-step sequence of N features.
  Var intra_in = permute(x, {1, 2, 0});                  // [S x R x N]
  Var intra_out = subblock_batch(intra_in, p.intra);
  // Inter-chunk: R slices, each an S-step sequence.
  Var inter_in = permute(intra_out, {1, 0, 2});          // [R x S x N]
  Var inter_out = subblock_batch(inter_in, p.inter);
  return permute(inter_out, {2, 1, 0});                  // [N x S x R]
}

}  // namespace sagrnn
