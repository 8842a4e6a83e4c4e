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

#ifndef SAGRNN_GAMMATONE_HPP_
#define SAGRNN_GAMMATONE_HPP_

#include <array>
#include <vector>

namespace sagrnn {

// 32-channel 4th-order gammatone filterbank, ERB-spaced 80 Hz .. 3.8 kHz,
// implemented as a frequency-shifted cascade of four complex one-pole
// low-passes (unit gain at each channel's center frequency). Outputs are
// advanced by each channel's envelope group delay so impulse peaks align.
class GammatoneBank {
 public:
  static constexpr int kChannels = 32;

  explicit GammatoneBank(int sample_rate = 8000);

  int sample_rate() const { return sample_rate_; }
  const std::vector<double>& center_freqs_hz() const { return centers_; }
  const std::vector<double>& bandwidths_hz() const { return bandwidths_; }
  const std::vector<int>& delay_samples() const { return delays_; }

  // Channel indices nearest 2.07, 3.08, 3.75 kHz (per-channel ILD).
  const std::array<int, 3>& designated_ild_channels() const {
    return designated_;
  }
  // Channels with center frequency below ~1.5 kHz (ITD dominance).
  const std::vector<int>& low_freq_channels() const { return low_channels_; }

  // Filters x into [kChannels x T].
  std::vector<std::vector<double>> analyze(const std::vector<double>& x) const;

 private:
  int sample_rate_;
  std::vector<double> centers_;
  std::vector<double> bandwidths_;
  std::vector<int> delays_;
  std::array<int, 3> designated_{};
  std::vector<int> low_channels_;
};

double erb_hz(double freq_hz);

}  // namespace sagrnn

#endif  // SAGRNN_GAMMATONE_HPP_
