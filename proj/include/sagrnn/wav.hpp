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

#ifndef SAGRNN_WAV_HPP_
#define SAGRNN_WAV_HPP_

#include <string>
#include <vector>

namespace sagrnn {

enum class WavFormat { kFloat32, kPcm16 };

struct WavData {
  int sample_rate = 8000;
  std::vector<std::vector<double>> channels;  // equal lengths

  int64_t frames() const {
    return channels.empty() ? 0 : static_cast<int64_t>(channels[0].size());
  }
};

// RIFF/WAVE, IEEE float32 or 16-bit PCM. Deterministic byte output for
// identical input samples.
void write_wav(const std::string& path, const WavData& wav,
               WavFormat format = WavFormat::kFloat32);
WavData read_wav(const std::string& path);

}  // namespace sagrnn

#endif  // SAGRNN_WAV_HPP_
