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
// Training loop (shuffled minibatches, per-step clip + AMSGrad update,
// per-epoch learning-rate schedule, deterministic under a fixed seed)
// plus inference and evaluation over rendered scenes.

#ifndef SAGRNN_TRAINER_HPP_
#define SAGRNN_TRAINER_HPP_

#include <functional>
#include <string>
#include <vector>

#include "sagrnn/binaural_sim.hpp"
#include "sagrnn/checkpoint.hpp"
#include "sagrnn/cue_eval.hpp"
#include "sagrnn/loss.hpp"
#include "sagrnn/model.hpp"
#include "sagrnn/optim.hpp"

namespace sagrnn {

// One training/evaluation item held in memory.
struct SceneItem {
  std::string id;
  BinauralSignal mixture;
  std::vector<BinauralSignal> references;  // C entries
};

// Reads a manifest split's WAVs from data_dir.
std::vector<SceneItem> load_scenes(const Manifest& manifest,
                                   const std::string& data_dir,
                                   const std::string& split);

struct TrainConfig {
  int64_t epochs = 40;
  int64_t steps_per_epoch = 0;  // 0: one pass over the training split
  int64_t batch_size = 4;
  double max_grad_norm = 3.0;
  double base_lr = 2e-4;
  double lr_decay = 0.98;
  int64_t lr_decay_every = 2;
  uint64_t seed = 1;
  // Optional early exit: every eval_every_steps, measure mean train-set
  // SNR improvement and stop once target_train_snr_db is reached.
  int64_t eval_every_steps = 0;
  double target_train_snr_db = 0.0;
  std::string log_path;  // step log; empty writes no file
};

struct TrainResult {
  int64_t steps = 0;
  double final_loss = 0.0;
  double best_valid_snr_db = 0.0;
  bool reached_target = false;
  std::vector<std::string> log_lines;  // one record per step
};

// Runs the training protocol over the manifest's train split, validates
// on the valid split (mean SNR improvement), and writes the
// best-validation checkpoint to ckpt_out (final state when no valid
// split exists). Deterministic given (configs, seed).
TrainResult fit(SagrnnParams& params, const Manifest& manifest,
                const std::string& data_dir, const LossConfig& loss_cfg,
                const TrainConfig& train_cfg, const std::string& ckpt_out);

// Last-block estimates in raw output order (no reference matching).
std::vector<BinauralSignal> separate(const SagrnnParams& params,
                                     const BinauralSignal& mixture);

// Mean SNR improvement of PIT-matched estimates over a scene set.
double mean_snr_improvement(const SagrnnParams& params,
                            const std::vector<SceneItem>& scenes,
                            double epsilon = 1e-8);

struct EvalRow {
  SepMetrics sep;
  CueErrors cues;
  bool undefined_cue = false;
};

struct UtteranceEval {
  std::string id;
  std::vector<EvalRow> estimate;  // per speaker, matched to references
  std::vector<EvalRow> mixture;   // mixture-as-estimate baseline
};

struct EvalSummary {
  int64_t rows = 0;
  int64_t excluded = 0;
  double snr_improvement_db = 0.0;
  double si_snr_improvement_db = 0.0;
  double itd_error_us = 0.0;
  std::array<double, 3> ild_error_db{};
  double azimuth_error_deg = 0.0;
};

struct EvalReport {
  std::vector<UtteranceEval> utterances;
  EvalSummary estimate_summary;
  EvalSummary mixture_summary;
  std::array<double, 3> designated_center_freqs_hz{};
};

// Separates every scene, matches estimates to references by best joint
// SNR permutation, and scores separation + cue preservation for both the
// estimates and the raw mixtures.
EvalReport evaluate_scenes(const SagrnnParams& params,
                           const std::vector<SceneItem>& scenes,
                           double epsilon = 1e-8, int jobs = 1);

}  // namespace sagrnn

#endif  // SAGRNN_TRAINER_HPP_
