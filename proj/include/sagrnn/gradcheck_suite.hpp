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

#ifndef SAGRNN_GRADCHECK_SUITE_HPP_
#define SAGRNN_GRADCHECK_SUITE_HPP_

#include <string>
#include <vector>

namespace sagrnn {

struct GradCheckRow {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Central-difference checks (h = 1e-5) for every layer op plus the full
// tiny-config network loss against 25 randomly sampled parameter
// coordinates. Deterministic; tolerance 1e-4 throughout.
std::vector<GradCheckRow> run_gradcheck_suite();

}  // namespace sagrnn

#endif  // SAGRNN_GRADCHECK_SUITE_HPP_
