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
// Checkpoint file layout (all integers little-endian):
//   magic "SGRN"
//   format version: u32
//   config text length: u64, followed by canonical config text (JSON with
//     sorted keys)
//   record count: u64, then per record:
//     name length u64, name bytes, rank u64, extents u64 each,
//     raw IEEE-754 doubles
//   checksum trailer: u64 FNV-1a over every preceding byte
// Round-trips are byte-exact; bad magic, unsupported version, truncation,
// and checksum mismatch are reported as distinct format errors.

#ifndef SAGRNN_CHECKPOINT_HPP_
#define SAGRNN_CHECKPOINT_HPP_

#include <string>
#include <vector>

#include "sagrnn/model.hpp"
#include "sagrnn/optim.hpp"

namespace sagrnn {

inline constexpr uint32_t kCheckpointVersion = 1;

std::string canonical_config_text(const ModelConfig& config);
ModelConfig parse_config_text(const std::string& text);

void save_checkpoint(const SagrnnParams& params, const AmsGrad* optim,
                     const std::string& path);

struct LoadedCheckpoint {
  SagrnnParams params;
  bool has_optim = false;
  int64_t optim_step = 0;
  std::vector<AmsGrad::Slot> optim_slots;  // in parameter-store order
};

LoadedCheckpoint load_checkpoint(const std::string& path);
// Additionally rejects checkpoints whose stored config differs.
LoadedCheckpoint load_checkpoint(const std::string& path,
                                 const ModelConfig& expected);

// Copies saved optimizer state into an optimizer built over the loaded
// parameter store.
void restore_optimizer(const LoadedCheckpoint& ckpt, AmsGrad* optim);

}  // namespace sagrnn

#endif  // SAGRNN_CHECKPOINT_HPP_
