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

#ifndef SAGRNN_RUNCONFIG_HPP_
#define SAGRNN_RUNCONFIG_HPP_

#include <string>
#include <vector>

#include "sagrnn/binaural_sim.hpp"
#include "sagrnn/loss.hpp"
#include "sagrnn/model.hpp"
#include "sagrnn/trainer.hpp"

namespace sagrnn {

// Batch run configuration: JSON file with sections {sim, model, loss,
// train} plus top-level {seed, jobs}. Unknown keys are rejected.
// Overrides use dotted paths, e.g. "model.channels=32".
struct RunConfig {
  uint64_t seed = 1;
  int jobs = 1;
  DatasetConfig sim;
  ModelConfig model;
  LossConfig loss;
  TrainConfig train;
};

RunConfig parse_run_config(const std::string& json_text,
                           const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides = {});

// Effective configuration echoed for reproducibility (sorted keys).
std::string run_config_json(const RunConfig& config);

}  // namespace sagrnn

#endif  // SAGRNN_RUNCONFIG_HPP_
