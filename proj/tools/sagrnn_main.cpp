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
// Batch entry points: scene simulation, training, separation,
// evaluation, and the gradient verification table.
//
// Exit codes: 0 success, 1 runtime/numeric failure, 2 usage/config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sagrnn/checkpoint.hpp"
#include "sagrnn/gradcheck_suite.hpp"
#include "sagrnn/kernels.hpp"
#include "sagrnn/runconfig.hpp"
#include "sagrnn/trainer.hpp"

namespace fs = std::filesystem;
using namespace sagrnn;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  int64_t seed_override = -1;
  int jobs_override = 0;
};

RunConfig effective_config(const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty()
                      ? parse_run_config("{}", opts.overrides)
                      : load_run_config(opts.config_path, opts.overrides);
  if (opts.seed_override >= 0) {
    cfg.seed = static_cast<uint64_t>(opts.seed_override);
    cfg.sim.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
  }
  if (opts.jobs_override > 0) cfg.jobs = opts.jobs_override;
  std::cout << "effective config:\n" << run_config_json(cfg) << "\n";
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts* opts, bool config_required) {
  auto* c = cmd->add_option("--config", opts->config_path,
                            "JSON run configuration");
  if (config_required) c->required();
  cmd->add_option("--set", opts->overrides,
                  "override config keys, e.g. --set model.channels=32");
  cmd->add_option("--seed", opts->seed_override,
                  "override every seed in the config");
  cmd->add_option("--jobs", opts->jobs_override,
                  "worker threads for simulate/evaluate (default 1)");
}

int cmd_simulate(const CommonOpts& opts, const std::string& out_dir) {
  RunConfig cfg = effective_config(opts);
  Manifest manifest = gen_dataset(cfg.sim, out_dir, cfg.jobs);
  std::cout << "wrote " << manifest.entries.size() << " scenes\n"
            << "manifest: " << (fs::path(out_dir) / "manifest.json").string()
            << "\n";
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& data_dir,
              const std::string& ckpt_out) {
  RunConfig cfg = effective_config(opts);
  const fs::path manifest_path = fs::path(data_dir) / "manifest.json";
  Manifest manifest = read_manifest(manifest_path.string());
  SagrnnParams params = init_sagrnn(cfg.model, cfg.seed);
  std::cout << "parameters: " << params.store.total_size() << "\n";
  TrainResult result =
      fit(params, manifest, data_dir, cfg.loss, cfg.train, ckpt_out);
  std::cout << "steps: " << result.steps
            << "  final loss: " << result.final_loss << "\n";
  if (result.best_valid_snr_db > -1e300) {
    std::cout << "best validation SNR improvement: "
              << result.best_valid_snr_db << " dB\n";
  }
  std::cout << "checkpoint: " << ckpt_out << "\n";
  return 0;
}

int cmd_separate(const std::string& ckpt_path, const std::string& input,
                 const std::string& out_dir) {
  LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
  WavData wav = read_wav(input);
  if (wav.channels.size() != 2) {
    throw ConfigError("separate: input must be a 2-channel (binaural) WAV");
  }
  if (wav.sample_rate != kSampleRate) {
    throw ConfigError("separate: input must be sampled at 8 kHz");
  }
  BinauralSignal mixture;
  mixture.left = wav.channels[0];
  mixture.right = wav.channels[1];
  mixture.sample_rate = wav.sample_rate;

  fs::create_directories(out_dir);
  const auto estimates = separate(ckpt.params, mixture);
  for (size_t k = 0; k < estimates.size(); ++k) {
    WavData out;
    out.sample_rate = kSampleRate;
    out.channels = {estimates[k].left, estimates[k].right};
    const fs::path path =
        fs::path(out_dir) / ("speaker" + std::to_string(k) + ".wav");
    write_wav(path.string(), out);
    std::cout << "wrote " << path.string() << "\n";
  }
  return 0;
}

nlohmann::json row_json(const EvalRow& row) {
  nlohmann::json j;
  j["snr_improvement_db"] = row.sep.snr_improvement_db;
  j["si_snr_improvement_db"] = row.sep.si_snr_improvement_db;
  j["undefined_cue"] = row.undefined_cue;
  if (!row.undefined_cue) {
    j["itd_error_us"] = row.cues.itd_us;
    j["ild_error_db"] = row.cues.ild_db;
    j["azimuth_error_deg"] = row.cues.azimuth_deg;
  }
  return j;
}

nlohmann::json summary_json(const EvalSummary& s) {
  return {{"rows", s.rows},
          {"excluded", s.excluded},
          {"snr_improvement_db", s.snr_improvement_db},
          {"si_snr_improvement_db", s.si_snr_improvement_db},
          {"itd_error_us", s.itd_error_us},
          {"ild_error_db", s.ild_error_db},
          {"azimuth_error_deg", s.azimuth_error_deg}};
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& data_dir,
                 const std::string& report_path, const std::string& split,
                 int jobs) {
  LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
  Manifest manifest =
      read_manifest((fs::path(data_dir) / "manifest.json").string());
  const auto scenes = load_scenes(manifest, data_dir, split);
  if (scenes.empty()) {
    throw ConfigError("evaluate: no scenes in split '" + split + "'");
  }
  EvalReport report = evaluate_scenes(ckpt.params, scenes, 1e-8, jobs);

  nlohmann::json j;
  j["split"] = split;
  j["designated_ild_center_freqs_hz"] = report.designated_center_freqs_hz;
  j["summary"] = {{"estimates", summary_json(report.estimate_summary)},
                  {"mixture", summary_json(report.mixture_summary)}};
  j["utterances"] = nlohmann::json::array();
  for (const auto& u : report.utterances) {
    nlohmann::json ju;
    ju["id"] = u.id;
    ju["estimates"] = nlohmann::json::array();
    ju["mixture"] = nlohmann::json::array();
    for (const auto& r : u.estimate) ju["estimates"].push_back(row_json(r));
    for (const auto& r : u.mixture) ju["mixture"].push_back(row_json(r));
    j["utterances"].push_back(std::move(ju));
  }
  std::ofstream f(report_path, std::ios::trunc);
  if (!f) throw IoError("cannot open report path: " + report_path);
  f << j.dump(2) << "\n";

  const auto& est = report.estimate_summary;
  const auto& mix = report.mixture_summary;
  std::printf("%-10s %12s %12s %12s %12s\n", "", "dSNR(dB)", "dITD(us)",
              "dILD(dB)", "dAz(deg)");
  std::printf("%-10s %12.2f %12.2f %12.2f %12.2f\n", "mixture",
              mix.snr_improvement_db, mix.itd_error_us, mix.ild_error_db[0],
              mix.azimuth_error_deg);
  std::printf("%-10s %12.2f %12.2f %12.2f %12.2f\n", "estimates",
              est.snr_improvement_db, est.itd_error_us, est.ild_error_db[0],
              est.azimuth_error_deg);
  std::cout << "report: " << report_path << "\n";

  int64_t undefined = est.excluded + mix.excluded;
  if (undefined > 0) {
    std::cerr << undefined
              << " rows had undefined cues (excluded from means)\n";
    return 1;
  }
  return 0;
}

int cmd_gradcheck() {
  const auto rows = run_gradcheck_suite();
  bool all_pass = true;
  std::printf("%-36s %14s %10s %6s\n", "op", "max rel err", "tol", "ok");
  for (const auto& r : rows) {
    std::printf("%-36s %14.3e %10.0e %6s\n", r.name.c_str(), r.max_rel_err,
                r.tolerance, r.pass ? "pass" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"binaural speaker separation pipeline"};
  app.require_subcommand(1);

  CommonOpts sim_opts, train_opts;
  std::string out_dir, data_dir, ckpt_path, ckpt_out, input_wav, report_path;
  std::string split = "test";
  int eval_jobs = 1;

  auto* simulate = app.add_subcommand("simulate", "render a scene dataset");
  add_common(simulate, &sim_opts, /*config_required=*/false);
  simulate->add_option("--out", out_dir, "output directory")->required();

  auto* train = app.add_subcommand("train", "train a separation model");
  add_common(train, &train_opts, /*config_required=*/false);
  train->add_option("--data", data_dir, "dataset directory (with manifest)")
      ->required();
  train->add_option("--ckpt-out", ckpt_out, "checkpoint output path")
      ->required();

  auto* separate_cmd =
      app.add_subcommand("separate", "separate one binaural mixture");
  separate_cmd->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  separate_cmd->add_option("--in", input_wav, "stereo 8 kHz mixture WAV")
      ->required();
  separate_cmd->add_option("--out-dir", out_dir, "output directory")
      ->required();

  auto* evaluate =
      app.add_subcommand("evaluate", "score separation and cue preservation");
  evaluate->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  evaluate->add_option("--data", data_dir, "dataset directory")->required();
  evaluate->add_option("--report", report_path, "JSON report path")
      ->required();
  evaluate->add_option("--split", split, "manifest split (default test)");
  evaluate->add_option("--jobs", eval_jobs, "parallel utterances");

  auto* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim_opts, out_dir);
    if (train->parsed()) return cmd_train(train_opts, data_dir, ckpt_out);
    if (separate_cmd->parsed()) {
      return cmd_separate(ckpt_path, input_wav, out_dir);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(ckpt_path, data_dir, report_path, split, eval_jobs);
    }
    if (gradcheck->parsed()) return cmd_gradcheck();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
