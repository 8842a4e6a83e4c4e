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
// End-to-end acceptance checks. Each criterion prints one PASS/FAIL
// line; all tolerances are pinned here in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "sagrnn/checkpoint.hpp"
#include "sagrnn/gradcheck_suite.hpp"
#include "sagrnn/rng.hpp"
#include "sagrnn/trainer.hpp"

using namespace sagrnn;
namespace fs = std::filesystem;

namespace {

void report(int criterion, bool pass, const std::string& what) {
  std::printf("criterion %2d [%s]: %s\n", criterion, pass ? "PASS" : "FAIL",
              what.c_str());
  std::fflush(stdout);
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("sagrnn_acc_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

ModelConfig tiny_mimo() {
  ModelConfig cfg;
  cfg.frame_size = 8;
  cfg.channels = 16;
  cfg.chunk_size = 14;
  cfg.hidden = 8;
  cfg.attention_dim = 8;
  cfg.num_blocks = 2;
  cfg.num_speakers = 2;
  cfg.mode = ModelMode::kMimo;
  return cfg;
}

ModelConfig micro_mimo() {
  ModelConfig cfg = tiny_mimo();
  cfg.channels = 6;
  cfg.chunk_size = 6;
  cfg.hidden = 3;
  cfg.attention_dim = 4;
  cfg.frame_size = 4;
  return cfg;
}

DatasetConfig overfit_dataset(int64_t scenes, uint64_t seed) {
  DatasetConfig dc;
  dc.duration_s = 0.5;
  dc.num_speakers = 2;
  dc.train_scenes = scenes;
  dc.valid_scenes = 0;
  dc.test_scenes = 0;
  dc.noise_count_min = 0;
  dc.noise_count_max = 0;
  dc.min_azimuth_sep_deg = 25.0;
  dc.seed = seed;
  return dc;
}

TrainConfig overfit_train(uint64_t seed, int64_t max_steps, double target) {
  TrainConfig tc;
  tc.batch_size = 4;
  tc.steps_per_epoch = 100;  // lr decays by 0.98 every 200 steps
  tc.epochs = (max_steps + tc.steps_per_epoch - 1) / tc.steps_per_epoch;
  tc.seed = seed;
  tc.eval_every_steps = 100;
  tc.target_train_snr_db = target;
  return tc;
}

}  // namespace

TEST_CASE("criterion 1: gradient suite") {
  const double t0 = now_s();
  const auto rows = run_gradcheck_suite();
  const double elapsed = now_s() - t0;
  bool all_pass = true;
  for (const auto& r : rows) all_pass = all_pass && r.pass;
  const bool in_time = elapsed < 300.0;
  report(1, all_pass && in_time,
         "layer ops + full tiny-config loss vs central differences "
         "(rel err < 1e-4, " +
             std::to_string(elapsed) + " s)");
  for (const auto& r : rows) CHECK_MESSAGE(r.pass, r.name);
  CHECK(in_time);
}

TEST_CASE("criterion 2: plumbing identities") {
  Rng rng(4021);
  bool ok = true;

  // chunk/merge and frame OLA round-trips, exact to 1e-12.
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t n = 1 + static_cast<int64_t>(rng() % 4);
    const int64_t r = 2 * (1 + static_cast<int64_t>(rng() % 8));
    const int64_t l = 1 + static_cast<int64_t>(rng() % 200);
    Tensor u = Tensor::uniform({n, l}, -1, 1, rng);
    Var merged = merge_chunks(chunk(constant(u), r), l);
    for (int64_t i = 0; i < u.numel(); ++i) {
      ok = ok && std::fabs(merged->value[i] - u[i]) < 1e-12;
    }

    const int64_t p = 2 * (1 + static_cast<int64_t>(rng() % 6));
    const int64_t hop = p / 2;
    const int64_t t = p + hop * (1 + static_cast<int64_t>(rng() % 40));
    Tensor wave = Tensor::uniform({t}, -1, 1, rng);
    const int64_t frames_n = (t - p) / hop + 1;
    Tensor frames({p, frames_n});
    for (int64_t f = 0; f < frames_n; ++f) {
      for (int64_t q = 0; q < p; ++q) frames.at({q, f}) = wave[f * hop + q];
    }
    Var out = overlap_add_frames(constant(frames), hop, t);
    for (int64_t i = 0; i < t; ++i) {
      ok = ok && std::fabs(out->value[i] - wave[i]) < 1e-12;
    }
  }
  CHECK(ok);

  // Attention rows sum to one within 1e-12.
  {
    const int64_t m = 11, n = 6, d = 4;
    AttentionParams p;
    auto mk = [&rng](Shape s) {
      return make_leaf(Tensor::uniform(std::move(s), -0.7, 0.7, rng), true);
    };
    p.w_q = mk({d, n});
    p.b_q = mk({d});
    p.w_k = mk({d, n});
    p.b_k = mk({d});
    p.w_v = mk({d, n});
    p.b_v = mk({d});
    p.w_merge = mk({n, d});
    p.b_merge = mk({n});
    p.w_fuse = mk({n, 2 * n});
    p.b_fuse = mk({n});
    Var attn;
    self_attention_batch(constant(Tensor::uniform({3, m, n}, -2, 2, rng)), p,
                         &attn);
    bool rows_ok = true;
    for (int64_t g = 0; g < 3; ++g) {
      for (int64_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (int64_t j = 0; j < m; ++j) s += attn->value.at({g, i, j});
        rows_ok = rows_ok && std::fabs(s - 1.0) < 1e-12;
      }
    }
    CHECK(rows_ok);
    ok = ok && rows_ok;
  }

  // MIMO ear-swap symmetry, bit-exact.
  {
    SagrnnParams params = init_sagrnn(micro_mimo(), 555);
    Tensor left = Tensor::uniform({96}, -1, 1, rng);
    Tensor right = Tensor::uniform({96}, -1, 1, rng);
    NoGradGuard no_grad;
    auto fwd = mimo_forward(constant(left), constant(right), params);
    auto swp = mimo_forward(constant(right), constant(left), params);
    bool swap_ok = true;
    for (size_t b = 0; b < fwd.size(); ++b) {
      for (int64_t c = 0; c < 2; ++c) {
        for (int64_t i = 0; i < 96; ++i) {
          swap_ok = swap_ok && fwd[b]->value.at({c, 0, i}) ==
                                   swp[b]->value.at({c, 1, i});
          swap_ok = swap_ok && fwd[b]->value.at({c, 1, i}) ==
                                   swp[b]->value.at({c, 0, i});
        }
      }
    }
    CHECK(swap_ok);
    ok = ok && swap_ok;
  }
  report(2, ok, "chunk/OLA round-trips 1e-12, attention rows sum to 1, "
                "ear-swap bit-exact");
}

TEST_CASE("criterion 3: PIT equals exhaustive enumeration") {
  Rng rng(4031);
  LossConfig cfg;
  bool ok = true;
  int instances = 0;
  for (int64_t c : {2, 3, 4}) {
    for (int trial = 0; trial < 100; ++trial) {
      const int64_t t = 16 + static_cast<int64_t>(rng() % 16);
      const int64_t ears = (trial % 2) + 1;
      Tensor est = Tensor::uniform({c, ears, t}, -1, 1, rng);
      Tensor ref = Tensor::uniform({c, ears, t}, -1, 1, rng);
      PitResult r = pit_assign(constant(est), constant(ref), cfg);

      // Independent enumeration oracle.
      std::vector<int64_t> idx(c);
      std::iota(idx.begin(), idx.end(), 0);
      double best = 1e300;
      std::vector<int64_t> best_perm = idx;
      do {
        double acc = 0.0;
        for (int64_t j = 0; j < c; ++j) {
          for (int64_t e = 0; e < ears; ++e) {
            Tensor es({t}), rf({t});
            for (int64_t i = 0; i < t; ++i) {
              es[i] = est.at({idx[j], e, i});
              rf[i] = ref.at({j, e, i});
            }
            acc += snr_db(es, rf);
          }
        }
        const double loss = -acc / static_cast<double>(c * ears);
        if (loss < best) {
          best = loss;
          best_perm = idx;
        }
      } while (std::next_permutation(idx.begin(), idx.end()));

      ok = ok && (r.perms[0] == best_perm);
      ok = ok && std::fabs(r.loss->value.item() - best) <
                     1e-9 * (1.0 + std::fabs(best));
      ++instances;
    }
  }
  CHECK(ok);
  report(3, ok, "pit_assign == brute force over " +
                    std::to_string(instances) + " instances (C in {2,3,4})");
}

TEST_CASE("criterion 4: SNR sees scale, SI-SNR does not") {
  Rng rng(4041);
  Tensor s = Tensor::uniform({256}, -1, 1, rng);
  double energy = 0.0;
  for (int64_t i = 0; i < s.numel(); ++i) energy += s[i] * s[i];
  for (auto& v : s.vec()) v /= std::sqrt(energy);  // unit energy

  const double base = si_snr_db(s, s);
  bool ok = true;
  for (double alpha : {0.1, 1.0, 10.0}) {
    Tensor est = s;
    for (auto& v : est.vec()) v *= alpha;
    ok = ok && std::fabs(si_snr_db(est, s) - base) < 1e-6;
    const double expected =
        -10.0 * std::log10((alpha - 1.0) * (alpha - 1.0) + 1e-8);
    ok = ok && std::fabs(snr_db(est, s) - expected) < 1e-6;
  }
  CHECK(ok);
  report(4, ok,
         "si_snr(alpha*s, s) constant to 1e-6 dB; snr follows "
         "-10*log10((alpha-1)^2 + eps)");
}

TEST_CASE("criterion 5: optimizer conformance") {
  bool ok = true;

  // Hand-evaluated AMSGrad updates on a scalar, three steps, 1e-12.
  {
    ParamStore store;
    Var p = store.add("w", Tensor::scalar(0.3));
    AmsGrad optim(store);
    double m = 0, v = 0, vmax = 0, w = 0.3;
    const double b1 = 0.9, b2 = 0.999, lr = 2e-4, eps = 1e-8;
    const double grads[3] = {0.7, -1.3, 2.1};
    for (int t = 1; t <= 3; ++t) {
      p->clear_grad();
      p->ensure_grad();
      p->grad[0] = grads[t - 1];
      optim.step(lr);
      m = b1 * m + (1 - b1) * grads[t - 1];
      v = b2 * v + (1 - b2) * grads[t - 1] * grads[t - 1];
      vmax = std::max(vmax, v);
      w -= lr * (m / (1 - std::pow(b1, t))) /
           (std::sqrt(vmax / (1 - std::pow(b2, t))) + eps);
      ok = ok && std::fabs(p->value[0] - w) < 1e-12;
    }
  }

  // Learning-rate schedule: 2e-4 decayed by 0.98 every 2 epochs.
  for (int64_t epoch = 0; epoch < 23; ++epoch) {
    const double expected = 2e-4 * std::pow(0.98, epoch / 2);
    ok = ok && std::fabs(lr_at(epoch) - expected) < 1e-18;
  }

  // Clipping caps the global norm at 3 within 1e-12.
  {
    Rng rng(4051);
    ParamStore store;
    std::vector<Var> params;
    for (int i = 0; i < 3; ++i) {
      params.push_back(
          store.add("p" + std::to_string(i), Tensor::zeros({7})));
      params.back()->ensure_grad();
      params.back()->accum_grad(Tensor::uniform({7}, -2, 2, rng));
    }
    clip_grad_norm(store, 3.0);
    double norm_sq = 0.0;
    for (const auto& v : params) {
      for (int64_t i = 0; i < 7; ++i) norm_sq += v->grad[i] * v->grad[i];
    }
    ok = ok && std::sqrt(norm_sq) <= 3.0 + 1e-12;

    ParamStore store2;
    Var q = store2.add("q", Tensor::zeros({2}));
    q->ensure_grad();
    q->grad[0] = 6.0;
    ok = ok && std::fabs(clip_grad_norm(store2, 3.0) - 0.5) < 1e-15;
  }
  CHECK(ok);
  report(5, ok, "amsgrad hand-check 1e-12, lr schedule exact, clip caps at 3");
}

TEST_CASE("criterion 6: overfit run reaches 10 dB") {
  const double t0 = now_s();
  auto dir = temp_dir("overfit");
  Manifest manifest = gen_dataset(overfit_dataset(4, 42), dir.string());

  SagrnnParams params = init_sagrnn(tiny_mimo(), 7);
  LossConfig loss_cfg;
  TrainConfig train_cfg = overfit_train(3, 2000, 10.5);
  TrainResult result = fit(params, manifest, dir.string(), loss_cfg,
                           train_cfg, (dir / "overfit.ckpt").string());

  const auto scenes = load_scenes(manifest, dir.string(), "train");
  const double snr = mean_snr_improvement(params, scenes);
  const double elapsed = now_s() - t0;
  const bool ok = snr >= 10.0 && result.steps <= 2000 && elapsed < 1800.0;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "tiny MIMO overfit: %.2f dB mean dSNR after %lld steps "
                "(%.0f s)",
                snr, static_cast<long long>(result.steps), elapsed);
  report(6, ok, buf);
  CHECK(snr >= 10.0);
  CHECK(result.steps <= 2000);
  CHECK(elapsed < 1800.0);
}

TEST_CASE("criterion 7: cue-estimator closed loop") {
  const GammatoneBank bank(kSampleRate);
  bool ok = true;
  for (double az : {-60.0, -30.0, 0.0, 30.0, 60.0}) {
    const auto speech =
        synth_speech_like(9000 + static_cast<uint64_t>(az + 90), 0.5);
    const BinauralSignal sig = spatialize(speech, az);

    const double itd_err =
        std::fabs(utterance_itd(sig, bank) - woodworth_itd(az) * 1e6);
    ok = ok && itd_err <= 30.0;

    const auto az_track = azimuth_frames(sig, bank);
    double err = 0.0;
    int64_t n = 0;
    for (double a : az_track) {
      if (!std::isnan(a)) {
        err += std::fabs(a - az);
        ++n;
      }
    }
    ok = ok && n > 0 && (err / n) <= 5.0;
    ok = ok && std::fabs(broadband_ild_db(sig) - model_ild_db(az)) <= 1.0;
  }
  CHECK(ok);
  report(7, ok,
         "single sources at {-60,-30,0,30,60} deg: ITD<=30us, az<=5deg, "
         "ILD<=1dB");
}

TEST_CASE("criterion 8: trained estimates preserve cues better than mixtures") {
  auto dir = temp_dir("cue16");
  Manifest manifest = gen_dataset(overfit_dataset(16, 1234), dir.string());

  SagrnnParams params = init_sagrnn(tiny_mimo(), 11);
  LossConfig loss_cfg;
  TrainConfig train_cfg = overfit_train(5, 1500, 6.0);
  fit(params, manifest, dir.string(), loss_cfg, train_cfg, "");

  const auto scenes = load_scenes(manifest, dir.string(), "train");
  EvalReport rep = evaluate_scenes(params, scenes);
  const auto& est = rep.estimate_summary;
  const auto& mix = rep.mixture_summary;
  const bool ok = est.rows > 0 && mix.rows > 0 &&
                  est.azimuth_error_deg < mix.azimuth_error_deg &&
                  est.itd_error_us < mix.itd_error_us;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "16 scenes: dAz %.2f<%.2f deg, dITD %.1f<%.1f us, "
                "dSNR %.2f dB",
                est.azimuth_error_deg, mix.azimuth_error_deg,
                est.itd_error_us, mix.itd_error_us, est.snr_improvement_db);
  report(8, ok, buf);
  CHECK(est.azimuth_error_deg < mix.azimuth_error_deg);
  CHECK(est.itd_error_us < mix.itd_error_us);
}

TEST_CASE("criterion 9: ablation structure") {
  bool ok = true;
  ModelConfig cfg = tiny_mimo();
  cfg.num_blocks = 6;
  cfg.channels = 4;
  cfg.chunk_size = 4;
  cfg.hidden = 2;
  cfg.attention_dim = 2;

  // Full model: dense fan-in grows per block; attention present.
  {
    SagrnnParams full = init_sagrnn(cfg, 1);
    for (int64_t b = 0; b < 6; ++b) {
      ok = ok && full.block_fan_in(b) == (b + 1);
      ok = ok && full.blocks[b].intra.attention.has_value();
      ok = ok && (b == 0) == !full.blocks[b].dense_w;
    }
  }
  // (i) half multi-scale: blocks 4..6 of six; (ii) last only.
  ok = ok && multiscale_blocks(MultiScale::kLast3, 6) ==
                 std::vector<int64_t>{3, 4, 5};
  ok = ok &&
       multiscale_blocks(MultiScale::kLast, 6) == std::vector<int64_t>{5};
  ok = ok && multiscale_blocks(MultiScale::kAll, 6) ==
                 std::vector<int64_t>{0, 1, 2, 3, 4, 5};
  // (iii) without dense connections: every block consumes one input.
  {
    ModelConfig no_dc = cfg;
    no_dc.dense_connectivity = false;
    SagrnnParams p = init_sagrnn(no_dc, 1);
    for (int64_t b = 0; b < 6; ++b) {
      ok = ok && p.block_fan_in(b) == 1 && !p.blocks[b].dense_w;
    }
  }
  // (iv) without self-attention: attention is the identity map.
  {
    ModelConfig no_sa = cfg;
    no_sa.self_attention = false;
    SagrnnParams p = init_sagrnn(no_sa, 1);
    for (int64_t b = 0; b < 6; ++b) {
      ok = ok && !p.blocks[b].intra.attention.has_value() &&
           !p.blocks[b].inter.attention.has_value();
    }
    // The subblock then reduces to the gated-RNN path exactly.
    Rng rng(4091);
    Tensor x = Tensor::uniform({3, 4}, -1, 1, rng);
    Var direct = add(gated_rnn(constant(x), p.blocks[0].intra),
                     constant(x));
    Var via = subblock(constant(x), p.blocks[0].intra);
    for (int64_t i = 0; i < x.numel(); ++i) {
      ok = ok && direct->value[i] == via->value[i];
    }
  }
  // (v) both off.
  {
    ModelConfig plain = cfg;
    plain.dense_connectivity = false;
    plain.self_attention = false;
    SagrnnParams p = init_sagrnn(plain, 1);
    for (int64_t b = 0; b < 6; ++b) {
      ok = ok && p.block_fan_in(b) == 1 &&
           !p.blocks[b].intra.attention.has_value();
    }
  }
  CHECK(ok);
  report(9, ok, "toggles reproduce variants (i)-(v) structurally");
}

TEST_CASE("criterion 10: determinism and persistence") {
  bool ok = true;

  // Bit-identical datasets.
  auto d1 = temp_dir("det1");
  auto d2 = temp_dir("det2");
  DatasetConfig dc = overfit_dataset(2, 77);
  dc.duration_s = 0.125;
  Manifest m1 = gen_dataset(dc, d1.string());
  Manifest m2 = gen_dataset(dc, d2.string());
  ok = ok && file_bytes(d1 / "manifest.json") == file_bytes(d2 / "manifest.json");
  for (size_t i = 0; i < m1.entries.size(); ++i) {
    ok = ok && file_bytes(d1 / m1.entries[i].mixture_path) ==
                   file_bytes(d2 / m2.entries[i].mixture_path);
    for (size_t k = 0; k < m1.entries[i].reference_paths.size(); ++k) {
      ok = ok && file_bytes(d1 / m1.entries[i].reference_paths[k]) ==
                     file_bytes(d2 / m2.entries[i].reference_paths[k]);
    }
  }
  CHECK(ok);

  // Identical loss curves and separated WAVs across reruns.
  ModelConfig cfg = micro_mimo();
  LossConfig loss_cfg;
  TrainConfig tc;
  tc.epochs = 6;
  tc.steps_per_epoch = 2;
  tc.batch_size = 2;
  tc.seed = 9;
  auto run = [&](const fs::path& ckpt) {
    SagrnnParams params = init_sagrnn(cfg, 2025);
    TrainResult r = fit(params, m1, d1.string(), loss_cfg, tc, ckpt.string());
    return std::make_pair(r.log_lines, std::move(params));
  };
  auto [log_a, params_a] = run(d1 / "a.ckpt");
  auto [log_b, params_b] = run(d1 / "b.ckpt");
  ok = ok && log_a == log_b;
  ok = ok && file_bytes(d1 / "a.ckpt") == file_bytes(d1 / "b.ckpt");
  CHECK(log_a == log_b);

  {
    const auto scenes = load_scenes(m1, d1.string(), "train");
    auto write_estimates = [&](const SagrnnParams& p, const fs::path& dir) {
      fs::create_directories(dir);
      const auto est = separate(p, scenes[0].mixture);
      for (size_t k = 0; k < est.size(); ++k) {
        WavData wav;
        wav.sample_rate = kSampleRate;
        wav.channels = {est[k].left, est[k].right};
        write_wav((dir / ("spk" + std::to_string(k) + ".wav")).string(), wav);
      }
      return est.size();
    };
    const size_t n1 = write_estimates(params_a, d1 / "sep1");
    const size_t n2 = write_estimates(params_a, d1 / "sep2");
    ok = ok && n1 == n2;
    for (size_t k = 0; k < n1; ++k) {
      const std::string name = "spk" + std::to_string(k) + ".wav";
      ok = ok && file_bytes(d1 / "sep1" / name) ==
                     file_bytes(d1 / "sep2" / name);
    }
  }

  // Checkpoint round-trip byte-exactness (including optimizer state).
  {
    SagrnnParams params = init_sagrnn(cfg, 31415);
    AmsGrad optim(params.store);
    for (const auto& [name, v] : params.store.items()) {
      v->ensure_grad();
      for (auto& g : v->grad.vec()) g = 0.125;
    }
    optim.step(2e-4);
    save_checkpoint(params, &optim, (d1 / "rt1.ckpt").string());
    LoadedCheckpoint loaded = load_checkpoint((d1 / "rt1.ckpt").string());
    AmsGrad optim2(loaded.params.store);
    restore_optimizer(loaded, &optim2);
    save_checkpoint(loaded.params, &optim2, (d1 / "rt2.ckpt").string());
    ok = ok && file_bytes(d1 / "rt1.ckpt") == file_bytes(d1 / "rt2.ckpt");
  }
  CHECK(ok);
  report(10, ok,
         "bit-identical datasets, loss curves, separations; byte-exact "
         "checkpoints");
}
