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
// Network building blocks: LSTM/BLSTM, scaled dot-product self-attention,
// the gated RNN module, subblocks, and the SA-MULCAT block. All layer
// functions exist in two forms: the single-slice form matching the layer
// contracts, and a batched form that processes G independent slices in
// one pass. Batching is a throughput choice only; per-slice results are
// identical either way.

#ifndef SAGRNN_LAYERS_HPP_
#define SAGRNN_LAYERS_HPP_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sagrnn/autodiff.hpp"

namespace sagrnn {

// Named parameter registry. Registration order is fixed by construction
// and defines the checkpoint record order.
class ParamStore {
 public:
  Var add(const std::string& name, Tensor init);
  const std::vector<std::pair<std::string, Var>>& items() const {
    return items_;
  }
  Var find(const std::string& name) const;  // null when absent
  int64_t total_size() const;
  void zero_grads() const;

 private:
  std::vector<std::pair<std::string, Var>> items_;
};

// Gate order on the 4H axis is fixed: input, forget, cell, output.
struct LstmParams {
  Var w_ih;  // [4H x I]
  Var w_hh;  // [4H x H]
  Var bias;  // [4H]
  int64_t hidden() const { return w_hh->value.extent(1); }
  int64_t input() const { return w_ih->value.extent(1); }
};

struct AttentionParams {
  Var w_q, b_q;  // [D x N], [D]
  Var w_k, b_k;
  Var w_v, b_v;
  Var w_merge, b_merge;  // [N x D], [N]
  Var w_fuse, b_fuse;    // [N x 2N], [N]
};

// One intra- or inter-chunk subblock: optional self-attention followed by
// the gated RNN module (two BLSTMs, Hadamard product, concat, projection).
struct SubblockParams {
  std::optional<AttentionParams> attention;
  LstmParams lstm1_fwd, lstm1_bwd;
  LstmParams lstm2_fwd, lstm2_bwd;
  Var w_out, b_out;  // [N x (2H + N)], [N]
};

struct SaMulcatParams {
  Var dense_w, dense_b;  // [N x bN], [N]; null for block 1 or without DC
  SubblockParams intra;
  SubblockParams inter;
};

// One LSTM cell update. x may be [I] with h,c [H], or a batch [G x I]
// with h,c [G x H].
std::pair<Var, Var> lstm_step(const Var& x, const Var& h, const Var& c,
                              const LstmParams& p);

// Cell update from precomputed input projections pre = x W_ih^T + b,
// shape [G x 4H]. This is the fused core of lstm_step.
std::pair<Var, Var> lstm_step_pre(const Var& pre, const Var& h, const Var& c,
                                  const Var& w_hh);

// One whole unidirectional pass over M steps as a single tape node with
// internal backpropagation through time: pre [G x M x 4H] -> all hidden
// states [G x M x H] in original time order. reverse runs steps M-1..0.
// Identical cell math to lstm_step; fused for throughput.
Var lstm_sequence(const Var& pre, const Var& w_hh, bool reverse);

// Bidirectional pass over a length-M sequence from zero initial states,
// per-step outputs concatenated: [M x I] -> [M x 2H].
Var blstm(const Var& x, const LstmParams& fwd, const LstmParams& bwd);
// Batched over G independent sequences: [G x M x I] -> [G x M x 2H].
Var blstm_batch(const Var& x, const LstmParams& fwd, const LstmParams& bwd);

// Scaled dot-product self-attention with merge and skip-fusion
// projections: [M x N] -> [M x N]. attn_out, when non-null, receives the
// per-query attention distribution over keys ([M x M] / [G x M x M]).
Var self_attention(const Var& z, const AttentionParams& p,
                   Var* attn_out = nullptr);
Var self_attention_batch(const Var& z, const AttentionParams& p,
                         Var* attn_out = nullptr);  // [G x M x N]

// Gated RNN module: blstm1(X) (.) blstm2(X), concat with X, projection
// back to N features. [M x N] -> [M x N].
Var gated_rnn(const Var& x, const SubblockParams& p);
Var gated_rnn_batch(const Var& x, const SubblockParams& p);

// Subblock with additive bypass: gated_rnn(self_attention(X)) + X.
// Attention is the identity map when p.attention is absent.
Var subblock(const Var& x, const SubblockParams& p);
Var subblock_batch(const Var& x, const SubblockParams& p);

// One SA-MULCAT block. inputs are the embeddings [N x S x R] this block
// consumes (all preceding blocks under dense connectivity, otherwise just
// the previous one). The dense-input projection is applied when
// p.dense_w is set; block 1 never carries one.
Var sa_mulcat(const std::vector<Var>& inputs, const SaMulcatParams& p);

}  // namespace sagrnn

#endif  // SAGRNN_LAYERS_HPP_
