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
// Training objective: plain SNR (SI-SNR kept for ablation/metrics),
// permutation-invariant assignment per block, and the multi-scale mean
// over block losses.

#ifndef SAGRNN_LOSS_HPP_
#define SAGRNN_LOSS_HPP_

#include <vector>

#include "sagrnn/autodiff.hpp"
#include "sagrnn/model.hpp"

namespace sagrnn {

enum class Objective { kSnr, kSiSnr };
enum class PitScope { kJointEars, kPerEar };

std::string to_string(Objective o);
std::string to_string(PitScope s);
Objective objective_from_string(const std::string& s);
PitScope pit_scope_from_string(const std::string& s);

struct LossConfig {
  double epsilon = 1e-8;
  MultiScale multiscale = MultiScale::kAll;
  Objective objective = Objective::kSnr;
  PitScope pit_scope = PitScope::kJointEars;
};

// 10 log10((|ref|^2 + eps) / (|ref - est|^2 + eps)). Not scale-invariant:
// level errors in the estimate are penalized, which is what lets the
// objective see ILD.
Var snr_db(const Var& est, const Var& ref, double epsilon = 1e-8);
double snr_db(const Tensor& est, const Tensor& ref, double epsilon = 1e-8);

// Scale-invariant variant: both signals zero-meaned, estimate projected
// onto the reference before scoring. The epsilon regularizer scales with
// the estimate energy, keeping the score exactly constant under
// est -> alpha * est (including the capped perfect-estimate case).
Var si_snr_db(const Var& est, const Var& ref, double epsilon = 1e-8);
double si_snr_db(const Tensor& est, const Tensor& ref, double epsilon = 1e-8);

struct PitResult {
  // One permutation per ear under kPerEar, a single shared one under
  // kJointEars. perms[e][j] is the estimate index assigned to reference j.
  std::vector<std::vector<int64_t>> perms;
  Var loss;  // negative mean objective over speakers and ears
};

// est/ref: [C x T] (single ear) or [C x E x T]. Enumerates all C!
// speaker permutations; C > 6 is rejected.
PitResult pit_assign(const Var& est, const Var& ref, const LossConfig& cfg);

// Block indices (0-based) participating in the multi-scale mean.
std::vector<int64_t> multiscale_blocks(MultiScale mode, int64_t num_blocks);

// Mean of per-block PIT losses over the included blocks.
Var multi_scale_loss(const std::vector<Var>& block_estimates, const Var& ref,
                     const LossConfig& cfg);

}  // namespace sagrnn

#endif  // SAGRNN_LOSS_HPP_
