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

#include "sagrnn/model.hpp"

#include <algorithm>
#include <cmath>

#include "sagrnn/rng.hpp"

namespace sagrnn {

std::string to_string(MultiScale m) {
  switch (m) {
    case MultiScale::kAll: return "all";
    case MultiScale::kLast3: return "last3";
    case MultiScale::kLast: return "last";
  }
  return "all";
}

std::string to_string(ModelMode m) {
  return m == ModelMode::kSiso ? "siso" : "mimo";
}

MultiScale multiscale_from_string(const std::string& s) {
  if (s == "all") return MultiScale::kAll;
  if (s == "last3") return MultiScale::kLast3;
  if (s == "last") return MultiScale::kLast;
  throw ConfigError("unknown multiscale mode: " + s);
}

ModelMode mode_from_string(const std::string& s) {
  if (s == "siso") return ModelMode::kSiso;
  if (s == "mimo") return ModelMode::kMimo;
  throw ConfigError("unknown model mode: " + s);
}

void ModelConfig::validate() const {
  if (frame_size < 2 || frame_size % 2 != 0) {
    throw ConfigError("frame size P must be even and >= 2");
  }
  if (chunk_size < 2 || chunk_size % 2 != 0) {
    throw ConfigError("chunk size R must be even and >= 2");
  }
  if (num_blocks < 1) throw ConfigError("block count B must be >= 1");
  if (num_speakers < 2) throw ConfigError("speaker count C must be >= 2");
  if (channels < 1 || hidden < 1 || attention_dim < 1) {
    throw ConfigError("N, H, D must be positive");
  }
}

int64_t SagrnnParams::block_fan_in(int64_t b) const {
  if (b == 0 || !config.dense_connectivity) return 1;
  return b + 1;
}

// ---------------------------------------------------------------------------
// Initialization

namespace {

Tensor uniform_fan_in(Shape shape, int64_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return Tensor::uniform(std::move(shape), -bound, bound, rng);
}

LstmParams init_lstm(ParamStore& store, const std::string& prefix, int64_t in,
                     int64_t hidden, Rng& rng) {
  LstmParams p;
  p.w_ih = store.add(prefix + ".w_ih",
                     uniform_fan_in({4 * hidden, in}, in, rng));
  p.w_hh = store.add(prefix + ".w_hh",
                     uniform_fan_in({4 * hidden, hidden}, hidden, rng));
  Tensor bias = uniform_fan_in({4 * hidden}, hidden, rng);
  for (int64_t j = hidden; j < 2 * hidden; ++j) bias[j] += 1.0;  // forget gate
  p.bias = store.add(prefix + ".bias", std::move(bias));
  return p;
}

AttentionParams init_attention(ParamStore& store, const std::string& prefix,
                               int64_t n, int64_t d, Rng& rng) {
  AttentionParams p;
  p.w_q = store.add(prefix + ".w_q", uniform_fan_in({d, n}, n, rng));
  p.b_q = store.add(prefix + ".b_q", uniform_fan_in({d}, n, rng));
  p.w_k = store.add(prefix + ".w_k", uniform_fan_in({d, n}, n, rng));
  p.b_k = store.add(prefix + ".b_k", uniform_fan_in({d}, n, rng));
  p.w_v = store.add(prefix + ".w_v", uniform_fan_in({d, n}, n, rng));
  p.b_v = store.add(prefix + ".b_v", uniform_fan_in({d}, n, rng));
  p.w_merge = store.add(prefix + ".w_merge", uniform_fan_in({n, d}, d, rng));
  p.b_merge = store.add(prefix + ".b_merge", uniform_fan_in({n}, d, rng));
  p.w_fuse =
      store.add(prefix + ".w_fuse", uniform_fan_in({n, 2 * n}, 2 * n, rng));
  p.b_fuse = store.add(prefix + ".b_fuse", uniform_fan_in({n}, 2 * n, rng));
  return p;
}

SubblockParams init_subblock(ParamStore& store, const std::string& prefix,
                             const ModelConfig& cfg, Rng& rng) {
  SubblockParams p;
  const int64_t n = cfg.channels, h = cfg.hidden;
  if (cfg.self_attention) {
    p.attention = init_attention(store, prefix + ".attn", n,
                                 cfg.attention_dim, rng);
  }
  p.lstm1_fwd = init_lstm(store, prefix + ".lstm1_fwd", n, h, rng);
  p.lstm1_bwd = init_lstm(store, prefix + ".lstm1_bwd", n, h, rng);
  p.lstm2_fwd = init_lstm(store, prefix + ".lstm2_fwd", n, h, rng);
  p.lstm2_bwd = init_lstm(store, prefix + ".lstm2_bwd", n, h, rng);
  p.w_out = store.add(prefix + ".w_out",
                      uniform_fan_in({n, 2 * h + n}, 2 * h + n, rng));
  p.b_out =
      store.add(prefix + ".b_out", uniform_fan_in({n}, 2 * h + n, rng));
  return p;
}

}  // namespace

SagrnnParams init_sagrnn(const ModelConfig& config, uint64_t seed) {
  config.validate();
  SagrnnParams p;
  p.config = config;
  Rng rng(derive_seed(seed, 0x70617261756d73ull));

  const int64_t n = config.channels;
  const int64_t pp = config.frame_size;
  const int64_t c = config.num_speakers;

  p.enc_ref = p.store.add("enc_ref.w", uniform_fan_in({n, pp}, pp, rng));
  if (config.mode == ModelMode::kMimo) {
    p.enc_nonref =
        p.store.add("enc_nonref.w", uniform_fan_in({n, pp}, pp, rng));
    p.fuse_w =
        p.store.add("fuse.w", uniform_fan_in({n, 2 * n}, 2 * n, rng));
    p.fuse_b = p.store.add("fuse.b", uniform_fan_in({n}, 2 * n, rng));
  }
  for (int64_t b = 0; b < config.num_blocks; ++b) {
    const std::string prefix = "block" + std::to_string(b);
    SaMulcatParams blk;
    const int64_t fan = config.dense_connectivity ? b + 1 : 1;
    if (b > 0 && config.dense_connectivity) {
      blk.dense_w = p.store.add(prefix + ".dense.w",
                                uniform_fan_in({n, fan * n}, fan * n, rng));
      blk.dense_b = p.store.add(prefix + ".dense.b",
                                uniform_fan_in({n}, fan * n, rng));
    }
    blk.intra = init_subblock(p.store, prefix + ".intra", config, rng);
    blk.inter = init_subblock(p.store, prefix + ".inter", config, rng);
    p.blocks.push_back(std::move(blk));
  }
  p.dec_prelu = p.store.add("dec.prelu", Tensor::full({n}, 0.25));
  p.dec_w = p.store.add("dec.w", uniform_fan_in({c * n, n}, n, rng));
  p.dec_b = p.store.add("dec.b", uniform_fan_in({c * n}, n, rng));
  p.basis = p.store.add("dec.basis", uniform_fan_in({pp, n}, n, rng));
  return p;
}

// ---------------------------------------------------------------------------
// Framing / chunking arithmetic

int64_t padded_input_length(int64_t t, int64_t frame_size) {
  const int64_t hop = frame_size / 2;
  if (t < frame_size) return frame_size;
  const int64_t rem = (t - frame_size) % hop;
  return rem == 0 ? t : t + hop - rem;
}

int64_t num_frames(int64_t t, int64_t frame_size) {
  const int64_t hop = frame_size / 2;
  return (padded_input_length(t, frame_size) - frame_size) / hop + 1;
}

int64_t padded_frame_count(int64_t l, int64_t chunk_size) {
  const int64_t hop = chunk_size / 2;
  if (l < chunk_size) return chunk_size;
  const int64_t rem = (l - chunk_size) % hop;
  return rem == 0 ? l : l + hop - rem;
}

int64_t num_chunks(int64_t l, int64_t chunk_size) {
  const int64_t hop = chunk_size / 2;
  return (padded_frame_count(l, chunk_size) - chunk_size) / hop + 1;
}

// ---------------------------------------------------------------------------
// Plumbing ops (chunk / merge / overlap-add), written as dedicated tape
// nodes with gather-form backward rules.

namespace {

Var pad_tail(const Var& x, int64_t new_len) {
  const Tensor& xv = x->value;
  const int64_t t = xv.extent(0);
  if (new_len == t) return x;
  Tensor out({new_len});
  std::copy(xv.data(), xv.data() + t, out.data());
  return make_node("pad_tail", std::move(out), {x}, [t](Node& self) {
    Var x = self.parents[0];
    if (!x->requires_grad) return;
    x->accum_grad(self.grad.data(), t);
  });
}

}  // namespace

Var encode(const Var& wave, const Var& kernels, int64_t frame_size) {
  const Tensor& wv = wave->value;
  if (wv.rank() != 1 || wv.extent(0) < frame_size) {
    throw DimensionError("encode: input must be at least one frame long");
  }
  const int64_t t_pad = padded_input_length(wv.extent(0), frame_size);
  Var padded = pad_tail(wave, t_pad);
  return relu(conv1d(padded, kernels, frame_size / 2));
}

Var chunk(const Var& u, int64_t chunk_size) {
  const Tensor& uv = u->value;
  if (uv.rank() != 2) throw DimensionError("chunk: expects [N x L]");
  if (chunk_size % 2 != 0) throw DimensionError("chunk: R must be even");
  const int64_t n = uv.extent(0), l = uv.extent(1);
  const int64_t hop = chunk_size / 2;
  const int64_t s = num_chunks(l, chunk_size);
  Tensor out({n, s, chunk_size});
  const double* pu = uv.data();
  double* po = out.data();
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t c = 0; c < s; ++c) {
      const int64_t start = c * hop;
      for (int64_t r = 0; r < chunk_size; ++r) {
        const int64_t pos = start + r;
        po[(i * s + c) * chunk_size + r] = pos < l ? pu[i * l + pos] : 0.0;
      }
    }
  }
  return make_node("chunk", std::move(out), {u},
                   [n, l, s, hop, chunk_size](Node& self) {
    Var u = self.parents[0];
    if (!u->requires_grad) return;
    u->ensure_grad();
    const double* g = self.grad.data();
    double* d = u->grad.data();
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t pos = 0; pos < l; ++pos) {
        const int64_t c_hi = std::min(pos / hop, s - 1);
        const int64_t lo_num = pos - chunk_size + 1;
        const int64_t c_lo = lo_num > 0 ? (lo_num + hop - 1) / hop : 0;
        double acc = 0.0;
        for (int64_t c = c_lo; c <= c_hi; ++c) {
          acc += g[(i * s + c) * chunk_size + (pos - c * hop)];
        }
        d[i * l + pos] += acc;
      }
    }
  });
}

namespace {

// Overlap counts for S segments of length `len` at hop `hop`.
std::vector<double> overlap_counts(int64_t segments, int64_t len,
                                   int64_t hop) {
  const int64_t total = (segments - 1) * hop + len;
  std::vector<double> counts(static_cast<size_t>(total), 0.0);
  for (int64_t s = 0; s < segments; ++s) {
    for (int64_t r = 0; r < len; ++r) counts[s * hop + r] += 1.0;
  }
  return counts;
}

}  // namespace

Var merge_chunks(const Var& w, int64_t l_out) {
  const Tensor& wv = w->value;
  if (wv.rank() != 3) throw DimensionError("merge_chunks: expects [N x S x R]");
  const int64_t n = wv.extent(0), s = wv.extent(1), r = wv.extent(2);
  const int64_t hop = r / 2;
  const int64_t l_full = (s - 1) * hop + r;
  if (l_out < 1 || l_out > l_full) {
    throw DimensionError("merge_chunks: output length out of range");
  }
  const auto counts = overlap_counts(s, r, hop);
  Tensor out({n, l_out});
  const double* pw = wv.data();
  double* po = out.data();
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t pos = 0; pos < l_out; ++pos) {
      const int64_t c_hi = std::min(pos / hop, s - 1);
      const int64_t lo_num = pos - r + 1;
      const int64_t c_lo = lo_num > 0 ? (lo_num + hop - 1) / hop : 0;
      double acc = 0.0;
      for (int64_t c = c_lo; c <= c_hi; ++c) {
        acc += pw[(i * s + c) * r + (pos - c * hop)];
      }
      po[i * l_out + pos] = acc / counts[pos];
    }
  }
  return make_node("merge_chunks", std::move(out), {w},
                   [n, s, r, hop, l_out, counts](Node& self) {
    Var w = self.parents[0];
    if (!w->requires_grad) return;
    w->ensure_grad();
    const double* g = self.grad.data();
    double* d = w->grad.data();
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t c = 0; c < s; ++c) {
        for (int64_t j = 0; j < r; ++j) {
          const int64_t pos = c * hop + j;
          if (pos < l_out) {
            d[(i * s + c) * r + j] += g[i * l_out + pos] / counts[pos];
          }
        }
      }
    }
  });
}

Var overlap_add_frames(const Var& frames, int64_t hop, int64_t t_out) {
  const Tensor& fv = frames->value;
  if (fv.rank() != 2) {
    throw DimensionError("overlap_add_frames: expects [P x L]");
  }
  const int64_t p = fv.extent(0), l = fv.extent(1);
  const int64_t t_full = (l - 1) * hop + p;
  if (t_out < 1 || t_out > t_full) {
    throw DimensionError("overlap_add_frames: output length out of range");
  }
  const auto counts = overlap_counts(l, p, hop);
  Tensor out({t_out});
  const double* pf = fv.data();
  double* po = out.data();
  for (int64_t pos = 0; pos < t_out; ++pos) {
    const int64_t f_hi = std::min(pos / hop, l - 1);
    const int64_t lo_num = pos - p + 1;
    const int64_t f_lo = lo_num > 0 ? (lo_num + hop - 1) / hop : 0;
    double acc = 0.0;
    for (int64_t f = f_lo; f <= f_hi; ++f) {
      acc += pf[(pos - f * hop) * l + f];  // frames stored [P x L]
    }
    po[pos] = acc / counts[pos];
  }
  return make_node("overlap_add", std::move(out), {frames},
                   [p, l, hop, t_out, counts](Node& self) {
    Var frames = self.parents[0];
    if (!frames->requires_grad) return;
    frames->ensure_grad();
    const double* g = self.grad.data();
    double* d = frames->grad.data();
    for (int64_t q = 0; q < p; ++q) {
      for (int64_t f = 0; f < l; ++f) {
        const int64_t pos = f * hop + q;
        if (pos < t_out) {
          d[q * l + f] += g[pos] / counts[pos];
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Decoder and forward passes

Var decode_block(const Var& w, const SagrnnParams& p, int64_t l, int64_t t) {
  const ModelConfig& cfg = p.config;
  const int64_t n = cfg.channels, c = cfg.num_speakers;
  Var act = prelu(w, p.dec_prelu);
  Var maps = pointwise_linear(act, p.dec_w, p.dec_b);  // [CN x S x R]
  std::vector<Var> waves;
  waves.reserve(c);
  for (int64_t spk = 0; spk < c; ++spk) {
    Var emb = narrow(maps, 0, spk * n, n);        // [N x S x R]
    Var frames_feat = merge_chunks(emb, l);       // [N x L]
    Var frames = matmul(p.basis, frames_feat);    // [P x L]
    Var wave = overlap_add_frames(frames, cfg.frame_size / 2, t);
    waves.push_back(reshape(wave, {1, t}));
  }
  return concat(0, waves);  // [C x T]
}

namespace {

// Shared pipeline after the encoder: chunk, B blocks with dense fan-in,
// per-block decode.
std::vector<Var> core_forward(const Var& u, const SagrnnParams& p, int64_t t) {
  const ModelConfig& cfg = p.config;
  const int64_t l = u->value.extent(1);
  Var w0 = chunk(u, cfg.chunk_size);

  std::vector<Var> embeddings{w0};
  std::vector<Var> estimates;
  estimates.reserve(cfg.num_blocks);
  for (int64_t b = 0; b < cfg.num_blocks; ++b) {
    std::vector<Var> inputs;
    if (cfg.dense_connectivity) {
      inputs = embeddings;  // all preceding outputs, w0 first
    } else {
      inputs = {embeddings.back()};
    }
    Var wb = sa_mulcat(inputs, p.blocks[b]);
    embeddings.push_back(wb);
    estimates.push_back(decode_block(wb, p, l, t));
  }
  return estimates;
}

}  // namespace

std::vector<Var> siso_forward(const Var& wave, const SagrnnParams& p) {
  if (p.config.mode != ModelMode::kSiso) {
    throw UsageError("siso_forward: params built for mimo mode");
  }
  const int64_t t = wave->value.extent(0);
  Var u = encode(wave, p.enc_ref, p.config.frame_size);
  return core_forward(u, p, t);
}

std::vector<Var> miso_forward(const Var& ref_wave, const Var& nonref_wave,
                              const SagrnnParams& p) {
  if (p.config.mode != ModelMode::kMimo) {
    throw UsageError("miso_forward: params built for siso mode");
  }
  if (ref_wave->value.extent(0) != nonref_wave->value.extent(0)) {
    throw DimensionError("miso_forward: ear signals must have equal length");
  }
  const int64_t t = ref_wave->value.extent(0);
  Var u_ref = encode(ref_wave, p.enc_ref, p.config.frame_size);
  Var u_non = encode(nonref_wave, p.enc_nonref, p.config.frame_size);
  Var u = pointwise_linear(concat(0, {u_ref, u_non}), p.fuse_w, p.fuse_b);
  return core_forward(u, p, t);
}

std::vector<Var> mimo_forward(const Var& left, const Var& right,
                              const SagrnnParams& p) {
  std::vector<Var> left_est = miso_forward(left, right, p);
  std::vector<Var> right_est = miso_forward(right, left, p);
  const int64_t c = p.config.num_speakers;
  const int64_t t = left->value.extent(0);
  std::vector<Var> out;
  out.reserve(left_est.size());
  for (size_t b = 0; b < left_est.size(); ++b) {
    Var le = reshape(left_est[b], {c, 1, t});
    Var re = reshape(right_est[b], {c, 1, t});
    out.push_back(concat(1, {le, re}));  // [C x 2 x T]
  }
  return out;
}

}  // namespace sagrnn
