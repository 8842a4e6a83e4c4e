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

#include "sagrnn/runconfig.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace sagrnn {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::vector<std::string>& known,
                    const std::string& section) {
  if (!j.is_object()) {
    throw ConfigError("config section '" + section + "' must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + section +
                        (section.empty() ? "" : ".") + key + "'");
    }
  }
}

template <typename T>
void read_field(const json& j, const char* key, T* dst) {
  if (j.contains(key)) *dst = j.at(key).get<T>();
}

void apply_override(json& root, const std::string& spec) {
  const size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like section.key=value: " + spec);
  }
  const std::string path = spec.substr(0, eq);
  const std::string value_text = spec.substr(eq + 1);

  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::exception&) {
    value = value_text;  // bare string
  }

  json* node = &root;
  size_t pos = 0;
  while (true) {
    const size_t dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot - pos);
    if (key.empty()) throw ConfigError("bad override path: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text,
                           const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);

  reject_unknown(j, {"seed", "jobs", "sim", "model", "loss", "train"}, "");

  RunConfig cfg;
  read_field(j, "seed", &cfg.seed);
  read_field(j, "jobs", &cfg.jobs);
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");

  if (j.contains("sim")) {
    const json& s = j["sim"];
    reject_unknown(s,
                   {"sample_rate", "duration_s", "num_speakers",
                    "train_scenes", "valid_scenes", "test_scenes",
                    "noise_count_min", "noise_count_max", "snr_db_min",
                    "snr_db_max", "min_azimuth_sep_deg", "seed"},
                   "sim");
    read_field(s, "sample_rate", &cfg.sim.sample_rate);
    read_field(s, "duration_s", &cfg.sim.duration_s);
    read_field(s, "num_speakers", &cfg.sim.num_speakers);
    read_field(s, "train_scenes", &cfg.sim.train_scenes);
    read_field(s, "valid_scenes", &cfg.sim.valid_scenes);
    read_field(s, "test_scenes", &cfg.sim.test_scenes);
    read_field(s, "noise_count_min", &cfg.sim.noise_count_min);
    read_field(s, "noise_count_max", &cfg.sim.noise_count_max);
    read_field(s, "snr_db_min", &cfg.sim.snr_db_min);
    read_field(s, "snr_db_max", &cfg.sim.snr_db_max);
    read_field(s, "min_azimuth_sep_deg", &cfg.sim.min_azimuth_sep_deg);
    if (s.contains("seed")) {
      cfg.sim.seed = s.at("seed").get<uint64_t>();
    } else {
      cfg.sim.seed = cfg.seed;
    }
  } else {
    cfg.sim.seed = cfg.seed;
  }

  if (j.contains("model")) {
    const json& m = j["model"];
    reject_unknown(m,
                   {"frame_size", "channels", "chunk_size", "hidden",
                    "attention_dim", "num_blocks", "num_speakers",
                    "dense_connectivity", "self_attention", "multiscale",
                    "mode"},
                   "model");
    read_field(m, "frame_size", &cfg.model.frame_size);
    read_field(m, "channels", &cfg.model.channels);
    read_field(m, "chunk_size", &cfg.model.chunk_size);
    read_field(m, "hidden", &cfg.model.hidden);
    read_field(m, "attention_dim", &cfg.model.attention_dim);
    read_field(m, "num_blocks", &cfg.model.num_blocks);
    read_field(m, "num_speakers", &cfg.model.num_speakers);
    read_field(m, "dense_connectivity", &cfg.model.dense_connectivity);
    read_field(m, "self_attention", &cfg.model.self_attention);
    if (m.contains("multiscale")) {
      cfg.model.multiscale =
          multiscale_from_string(m.at("multiscale").get<std::string>());
    }
    if (m.contains("mode")) {
      cfg.model.mode = mode_from_string(m.at("mode").get<std::string>());
    }
    cfg.model.validate();
  }

  cfg.loss.multiscale = cfg.model.multiscale;
  if (j.contains("loss")) {
    const json& l = j["loss"];
    reject_unknown(l, {"epsilon", "multiscale", "objective", "pit_scope"},
                   "loss");
    read_field(l, "epsilon", &cfg.loss.epsilon);
    if (cfg.loss.epsilon <= 0.0) throw ConfigError("loss.epsilon must be > 0");
    if (l.contains("multiscale")) {
      cfg.loss.multiscale =
          multiscale_from_string(l.at("multiscale").get<std::string>());
    }
    if (l.contains("objective")) {
      cfg.loss.objective =
          objective_from_string(l.at("objective").get<std::string>());
    }
    if (l.contains("pit_scope")) {
      cfg.loss.pit_scope =
          pit_scope_from_string(l.at("pit_scope").get<std::string>());
    }
  }

  if (j.contains("train")) {
    const json& t = j["train"];
    reject_unknown(t,
                   {"epochs", "steps_per_epoch", "batch_size",
                    "max_grad_norm", "base_lr", "lr_decay", "lr_decay_every",
                    "seed", "eval_every_steps", "target_train_snr_db",
                    "log_path"},
                   "train");
    read_field(t, "epochs", &cfg.train.epochs);
    read_field(t, "steps_per_epoch", &cfg.train.steps_per_epoch);
    read_field(t, "batch_size", &cfg.train.batch_size);
    read_field(t, "max_grad_norm", &cfg.train.max_grad_norm);
    read_field(t, "base_lr", &cfg.train.base_lr);
    read_field(t, "lr_decay", &cfg.train.lr_decay);
    read_field(t, "lr_decay_every", &cfg.train.lr_decay_every);
    read_field(t, "eval_every_steps", &cfg.train.eval_every_steps);
    read_field(t, "target_train_snr_db", &cfg.train.target_train_snr_db);
    read_field(t, "log_path", &cfg.train.log_path);
    if (t.contains("seed")) {
      cfg.train.seed = t.at("seed").get<uint64_t>();
    } else {
      cfg.train.seed = cfg.seed;
    }
    if (cfg.train.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  } else {
    cfg.train.seed = cfg.seed;
  }

  return cfg;
}

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return parse_run_config(text, overrides);
}

std::string run_config_json(const RunConfig& config) {
  json j;
  j["seed"] = config.seed;
  j["jobs"] = config.jobs;
  j["sim"] = {{"sample_rate", config.sim.sample_rate},
              {"duration_s", config.sim.duration_s},
              {"num_speakers", config.sim.num_speakers},
              {"train_scenes", config.sim.train_scenes},
              {"valid_scenes", config.sim.valid_scenes},
              {"test_scenes", config.sim.test_scenes},
              {"noise_count_min", config.sim.noise_count_min},
              {"noise_count_max", config.sim.noise_count_max},
              {"snr_db_min", config.sim.snr_db_min},
              {"snr_db_max", config.sim.snr_db_max},
              {"min_azimuth_sep_deg", config.sim.min_azimuth_sep_deg},
              {"seed", config.sim.seed}};
  j["model"] = {{"frame_size", config.model.frame_size},
                {"channels", config.model.channels},
                {"chunk_size", config.model.chunk_size},
                {"hidden", config.model.hidden},
                {"attention_dim", config.model.attention_dim},
                {"num_blocks", config.model.num_blocks},
                {"num_speakers", config.model.num_speakers},
                {"dense_connectivity", config.model.dense_connectivity},
                {"self_attention", config.model.self_attention},
                {"multiscale", to_string(config.model.multiscale)},
                {"mode", to_string(config.model.mode)}};
  j["loss"] = {{"epsilon", config.loss.epsilon},
               {"multiscale", to_string(config.loss.multiscale)},
               {"objective", to_string(config.loss.objective)},
               {"pit_scope", to_string(config.loss.pit_scope)}};
  j["train"] = {{"epochs", config.train.epochs},
                {"steps_per_epoch", config.train.steps_per_epoch},
                {"batch_size", config.train.batch_size},
                {"max_grad_norm", config.train.max_grad_norm},
                {"base_lr", config.train.base_lr},
                {"lr_decay", config.train.lr_decay},
                {"lr_decay_every", config.train.lr_decay_every},
                {"seed", config.train.seed},
                {"eval_every_steps", config.train.eval_every_steps},
                {"target_train_snr_db", config.train.target_train_snr_db},
                {"log_path", config.train.log_path}};
  return j.dump(2);
}

}  // namespace sagrnn
