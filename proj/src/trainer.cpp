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

#include "sagrnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sagrnn {

namespace {

Tensor to_tensor(const std::vector<double>& v) {
  return Tensor({static_cast<int64_t>(v.size())}, v);
}

// Reference tensor for the loss: [C x 2 x T] (MIMO) or [C x T] (SISO,
// left ear).
Tensor reference_tensor(const SceneItem& item, ModelMode mode) {
  const int64_t c = static_cast<int64_t>(item.references.size());
  const int64_t t = item.mixture.length();
  if (mode == ModelMode::kMimo) {
    Tensor ref({c, 2, t});
    for (int64_t k = 0; k < c; ++k) {
      std::copy(item.references[k].left.begin(),
                item.references[k].left.end(),
                ref.data() + (k * 2 + 0) * t);
      std::copy(item.references[k].right.begin(),
                item.references[k].right.end(),
                ref.data() + (k * 2 + 1) * t);
    }
    return ref;
  }
  Tensor ref({c, t});
  for (int64_t k = 0; k < c; ++k) {
    std::copy(item.references[k].left.begin(), item.references[k].left.end(),
              ref.data() + k * t);
  }
  return ref;
}

std::vector<Var> forward_item(const SagrnnParams& params,
                              const SceneItem& item) {
  if (params.config.mode == ModelMode::kMimo) {
    return mimo_forward(constant(to_tensor(item.mixture.left)),
                        constant(to_tensor(item.mixture.right)), params);
  }
  return siso_forward(constant(to_tensor(item.mixture.left)), params);
}

std::string format_log_line(int64_t step, int64_t epoch, double lr,
                            double loss, double grad_norm,
                            double clip_scale) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "step=%lld epoch=%lld lr=%.10g loss=%.10g grad_norm=%.10g "
                "clip_scale=%.10g",
                static_cast<long long>(step), static_cast<long long>(epoch),
                lr, loss, grad_norm, clip_scale);
  return std::string(buf);
}

double global_grad_norm(const ParamStore& store) {
  double acc = 0.0;
  for (const auto& [name, v] : store.items()) {
    if (!v->has_grad) continue;
    for (int64_t i = 0; i < v->grad.numel(); ++i) {
      acc += v->grad[i] * v->grad[i];
    }
  }
  return std::sqrt(acc);
}

}  // namespace

std::vector<SceneItem> load_scenes(const Manifest& manifest,
                                   const std::string& data_dir,
                                   const std::string& split) {
  namespace fs = std::filesystem;
  std::vector<SceneItem> out;
  for (const ManifestEntry* e : manifest.split(split)) {
    SceneItem item;
    item.id = e->id;
    WavData mix = read_wav((fs::path(data_dir) / e->mixture_path).string());
    if (mix.channels.size() != 2) {
      throw FormatError("scene " + e->id + ": mixture must be 2-channel");
    }
    item.mixture.left = mix.channels[0];
    item.mixture.right = mix.channels[1];
    item.mixture.sample_rate = mix.sample_rate;
    for (const auto& rp : e->reference_paths) {
      WavData ref = read_wav((fs::path(data_dir) / rp).string());
      if (ref.channels.size() != 2) {
        throw FormatError("scene " + e->id + ": reference must be 2-channel");
      }
      BinauralSignal sig;
      sig.left = ref.channels[0];
      sig.right = ref.channels[1];
      sig.sample_rate = ref.sample_rate;
      item.references.push_back(std::move(sig));
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<BinauralSignal> separate(const SagrnnParams& params,
                                     const BinauralSignal& mixture) {
  NoGradGuard no_grad;
  const int64_t c = params.config.num_speakers;
  const int64_t t = mixture.length();
  std::vector<BinauralSignal> out(c);

  if (params.config.mode == ModelMode::kMimo) {
    auto blocks = mimo_forward(constant(to_tensor(mixture.left)),
                               constant(to_tensor(mixture.right)), params);
    const Tensor& est = blocks.back()->value;  // [C x 2 x T]
    for (int64_t k = 0; k < c; ++k) {
      out[k].sample_rate = mixture.sample_rate;
      out[k].left.assign(est.data() + (k * 2 + 0) * t,
                         est.data() + (k * 2 + 0) * t + t);
      out[k].right.assign(est.data() + (k * 2 + 1) * t,
                          est.data() + (k * 2 + 1) * t + t);
    }
    return out;
  }

  // SISO: each ear separated independently, outputs paired by index.
  auto left_blocks = siso_forward(constant(to_tensor(mixture.left)), params);
  auto right_blocks = siso_forward(constant(to_tensor(mixture.right)), params);
  const Tensor& le = left_blocks.back()->value;   // [C x T]
  const Tensor& re = right_blocks.back()->value;
  for (int64_t k = 0; k < c; ++k) {
    out[k].sample_rate = mixture.sample_rate;
    out[k].left.assign(le.data() + k * t, le.data() + k * t + t);
    out[k].right.assign(re.data() + k * t, re.data() + k * t + t);
  }
  return out;
}

namespace {

// Best joint-SNR permutation: perm[j] = estimate index for reference j.
std::vector<int64_t> match_by_snr(const std::vector<BinauralSignal>& est,
                                  const std::vector<BinauralSignal>& ref,
                                  double epsilon) {
  const int64_t c = static_cast<int64_t>(ref.size());
  std::vector<double> table(c * c);
  for (int64_t i = 0; i < c; ++i) {
    for (int64_t j = 0; j < c; ++j) {
      table[i * c + j] =
          snr_db(to_tensor(est[i].left), to_tensor(ref[j].left), epsilon) +
          snr_db(to_tensor(est[i].right), to_tensor(ref[j].right), epsilon);
    }
  }
  std::vector<int64_t> idx(c);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int64_t> best = idx;
  double best_score = -1e300;
  do {
    double s = 0.0;
    for (int64_t j = 0; j < c; ++j) s += table[idx[j] * c + j];
    if (s > best_score) {
      best_score = s;
      best = idx;
    }
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

}  // namespace

double mean_snr_improvement(const SagrnnParams& params,
                            const std::vector<SceneItem>& scenes,
                            double epsilon) {
  if (scenes.empty()) throw UsageError("mean_snr_improvement: no scenes");
  double acc = 0.0;
  int64_t rows = 0;
  for (const auto& scene : scenes) {
    const auto est = separate(params, scene.mixture);
    const auto perm = match_by_snr(est, scene.references, epsilon);
    for (size_t j = 0; j < scene.references.size(); ++j) {
      const SepMetrics m = sep_metrics(est[perm[j]], scene.references[j],
                                       scene.mixture, epsilon);
      acc += m.snr_improvement_db;
      ++rows;
    }
  }
  return acc / static_cast<double>(rows);
}

TrainResult fit(SagrnnParams& params, const Manifest& manifest,
                const std::string& data_dir, const LossConfig& loss_cfg,
                const TrainConfig& train_cfg, const std::string& ckpt_out) {
  const auto train_scenes = load_scenes(manifest, data_dir, "train");
  const auto valid_scenes = load_scenes(manifest, data_dir, "valid");
  if (train_scenes.empty()) throw UsageError("fit: empty train split");

  std::vector<Tensor> refs;
  refs.reserve(train_scenes.size());
  for (const auto& s : train_scenes) {
    refs.push_back(reference_tensor(s, params.config.mode));
  }

  AmsGrad optim(params.store);
  Rng rng(derive_seed(train_cfg.seed, 0x747261696eull));
  std::vector<size_t> order(train_scenes.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();  // forces a shuffle on first use

  const int64_t steps_per_epoch =
      train_cfg.steps_per_epoch > 0
          ? train_cfg.steps_per_epoch
          : (static_cast<int64_t>(train_scenes.size()) + train_cfg.batch_size -
             1) /
                train_cfg.batch_size;

  TrainResult result;
  result.best_valid_snr_db = -1e300;
  bool saved_any = false;
  int64_t step = 0;

  std::ofstream log_file;
  if (!train_cfg.log_path.empty()) {
    log_file.open(train_cfg.log_path, std::ios::trunc);
    if (!log_file) throw IoError("cannot open log: " + train_cfg.log_path);
  }

  auto maybe_save_best = [&] {
    if (valid_scenes.empty()) return;
    const double snr = mean_snr_improvement(params, valid_scenes);
    if (snr > result.best_valid_snr_db) {
      result.best_valid_snr_db = snr;
      if (!ckpt_out.empty()) {
        save_checkpoint(params, &optim, ckpt_out);
        saved_any = true;
      }
    }
  };

  for (int64_t epoch = 0; epoch < train_cfg.epochs && !result.reached_target;
       ++epoch) {
    const double lr = lr_at(epoch, train_cfg.base_lr, train_cfg.lr_decay,
                            train_cfg.lr_decay_every);
    for (int64_t s = 0; s < steps_per_epoch; ++s) {
      params.store.zero_grads();
      double batch_loss = 0.0;
      const int64_t batch =
          std::min<int64_t>(train_cfg.batch_size,
                            static_cast<int64_t>(train_scenes.size()));
      for (int64_t b = 0; b < batch; ++b) {
        if (cursor >= order.size()) {
          std::shuffle(order.begin(), order.end(), rng);
          cursor = 0;
        }
        const size_t item = order[cursor++];
        auto blocks = forward_item(params, train_scenes[item]);
        Var ref = constant(refs[item]);
        Var loss = multi_scale_loss(blocks, ref, loss_cfg);
        batch_loss += loss->value.item();
        // Scale so accumulated grads equal the batch-mean gradient.
        backward(mul_const(loss, 1.0 / static_cast<double>(batch)));
      }
      batch_loss /= static_cast<double>(batch);
      if (!std::isfinite(batch_loss)) {
        throw NumericError("fit: non-finite loss at step " +
                           std::to_string(step));
      }
      const double grad_norm = global_grad_norm(params.store);
      const double clip_scale =
          clip_grad_norm(params.store, train_cfg.max_grad_norm);
      optim.step(lr);
      ++step;

      const std::string line = format_log_line(step, epoch, lr, batch_loss,
                                               grad_norm, clip_scale);
      result.log_lines.push_back(line);
      if (log_file) log_file << line << "\n";
      result.final_loss = batch_loss;

      if (train_cfg.eval_every_steps > 0 &&
          step % train_cfg.eval_every_steps == 0 &&
          train_cfg.target_train_snr_db != 0.0) {
        const double train_snr = mean_snr_improvement(params, train_scenes);
        if (train_snr >= train_cfg.target_train_snr_db) {
          result.reached_target = true;
          break;
        }
      }
    }
    maybe_save_best();
  }

  result.steps = step;
  if ((!saved_any || valid_scenes.empty()) && !ckpt_out.empty()) {
    save_checkpoint(params, &optim, ckpt_out);
  }
  return result;
}

EvalReport evaluate_scenes(const SagrnnParams& params,
                           const std::vector<SceneItem>& scenes,
                           double epsilon, int jobs) {
  const GammatoneBank bank(kSampleRate);
  EvalReport report;
  report.utterances.resize(scenes.size());
  for (int k = 0; k < 3; ++k) {
    report.designated_center_freqs_hz[k] =
        bank.center_freqs_hz()[bank.designated_ild_channels()[k]];
  }

  const int64_t n = static_cast<int64_t>(scenes.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs))
#endif
  for (int64_t i = 0; i < n; ++i) {
    const SceneItem& scene = scenes[i];
    UtteranceEval ue;
    ue.id = scene.id;
    const auto est = separate(params, scene.mixture);
    const auto perm = match_by_snr(est, scene.references, epsilon);
    for (size_t j = 0; j < scene.references.size(); ++j) {
      EvalRow est_row, mix_row;
      est_row.sep = sep_metrics(est[perm[j]], scene.references[j],
                                scene.mixture, epsilon);
      mix_row.sep = sep_metrics(scene.mixture, scene.references[j],
                                scene.mixture, epsilon);
      try {
        est_row.cues = cue_errors(est[perm[j]], scene.references[j], bank);
      } catch (const UndefinedCueError&) {
        est_row.undefined_cue = true;
      }
      try {
        mix_row.cues = cue_errors(scene.mixture, scene.references[j], bank);
      } catch (const UndefinedCueError&) {
        mix_row.undefined_cue = true;
      }
      ue.estimate.push_back(est_row);
      ue.mixture.push_back(mix_row);
    }
    report.utterances[i] = std::move(ue);
  }
  (void)jobs;

  auto summarize = [](const std::vector<UtteranceEval>& utts,
                      bool mixture_side) {
    EvalSummary s;
    for (const auto& u : utts) {
      const auto& rows = mixture_side ? u.mixture : u.estimate;
      for (const auto& r : rows) {
        if (r.undefined_cue) {
          ++s.excluded;
          continue;
        }
        ++s.rows;
        s.snr_improvement_db += r.sep.snr_improvement_db;
        s.si_snr_improvement_db += r.sep.si_snr_improvement_db;
        s.itd_error_us += r.cues.itd_us;
        for (int k = 0; k < 3; ++k) s.ild_error_db[k] += r.cues.ild_db[k];
        s.azimuth_error_deg += r.cues.azimuth_deg;
      }
    }
    if (s.rows > 0) {
      const double inv = 1.0 / static_cast<double>(s.rows);
      s.snr_improvement_db *= inv;
      s.si_snr_improvement_db *= inv;
      s.itd_error_us *= inv;
      for (int k = 0; k < 3; ++k) s.ild_error_db[k] *= inv;
      s.azimuth_error_deg *= inv;
    }
    return s;
  };
  report.estimate_summary = summarize(report.utterances, false);
  report.mixture_summary = summarize(report.utterances, true);
  return report;
}

}  // namespace sagrnn
