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
// The separation network: encoder, chunking, a stack of SA-MULCAT
// blocks with dense connectivity, a shared per-block decoder, and the
// SISO/MISO/MIMO assemblies.

#ifndef SAGRNN_MODEL_HPP_
#define SAGRNN_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "sagrnn/layers.hpp"

namespace sagrnn {

enum class MultiScale { kAll, kLast3, kLast };
enum class ModelMode { kSiso, kMimo };

std::string to_string(MultiScale m);
std::string to_string(ModelMode m);
MultiScale multiscale_from_string(const std::string& s);
ModelMode mode_from_string(const std::string& s);

struct ModelConfig {
  int64_t frame_size = 8;      // P, samples per encoder frame
  int64_t channels = 128;      // N, embedding channels
  int64_t chunk_size = 126;    // R, frames per chunk
  int64_t hidden = 128;        // H, BLSTM units per direction
  int64_t attention_dim = 64;  // D
  int64_t num_blocks = 6;      // B
  int64_t num_speakers = 2;    // C
  bool dense_connectivity = true;
  bool self_attention = true;
  MultiScale multiscale = MultiScale::kAll;
  ModelMode mode = ModelMode::kMimo;

  void validate() const;  // throws ConfigError
  bool operator==(const ModelConfig&) const = default;
};

// The full named parameter set of one network instance. Exactly one
// decoder exists; it is applied to every block's output embedding.
struct SagrnnParams {
  ModelConfig config;
  ParamStore store;

  Var enc_ref;               // [N x P]
  Var enc_nonref;            // [N x P], MIMO only
  Var fuse_w, fuse_b;        // [N x 2N], [N], MIMO only
  std::vector<SaMulcatParams> blocks;
  Var dec_prelu;             // [N]
  Var dec_w, dec_b;          // [CN x N], [CN]
  Var basis;                 // [P x N], frame-level waveform basis

  // Number of embeddings block index b consumes (ablation introspection).
  int64_t block_fan_in(int64_t b) const;
  bool attention_enabled() const { return config.self_attention; }
};

// Builds freshly initialized parameters: uniform(-1/sqrt(fan_in),
// +1/sqrt(fan_in)) draws in fixed registration order, forget-gate
// biases shifted by +1, PReLU slopes at 0.25.
SagrnnParams init_sagrnn(const ModelConfig& config, uint64_t seed);

// Framing/chunking arithmetic shared by the model and its tests.
int64_t padded_input_length(int64_t t, int64_t frame_size);
int64_t num_frames(int64_t t, int64_t frame_size);
int64_t padded_frame_count(int64_t l, int64_t chunk_size);
int64_t num_chunks(int64_t l, int64_t chunk_size);

// wave[T] -> relu(conv1d(pad(wave), kernels, P/2)): [N x L].
Var encode(const Var& wave, const Var& kernels, int64_t frame_size);
// [N x L] -> [N x S x R] overlapped chunks at hop R/2 (tail zero-padded).
Var chunk(const Var& u, int64_t chunk_size);
// Inverse of chunk: overlap-add with per-position overlap-count
// normalization, truncated to l_out frames.
Var merge_chunks(const Var& w, int64_t l_out);
// frames[P x L] -> waveform [t_out] by overlap-add at hop P/2.
Var overlap_add_frames(const Var& frames, int64_t hop, int64_t t_out);
// Block embedding [N x S x R] -> per-speaker waveforms [C x T].
Var decode_block(const Var& w, const SagrnnParams& p, int64_t l, int64_t t);

// Forward passes; one estimate set per block (multi-scale training taps
// every block, inference uses the last).
std::vector<Var> siso_forward(const Var& wave, const SagrnnParams& p);
std::vector<Var> miso_forward(const Var& ref_wave, const Var& nonref_wave,
                              const SagrnnParams& p);
// Left and right estimates from one shared parameter set, alternating
// the reference ear: B x [C x 2 x T].
std::vector<Var> mimo_forward(const Var& left, const Var& right,
                              const SagrnnParams& p);

}  // namespace sagrnn

#endif  // SAGRNN_MODEL_HPP_
