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
// Interaural cue estimation on a gammatone cochleagram: per-T-F-unit
// ITD (cross-correlation with sub-sample interpolation) and ILD (energy
// ratio), histogram-mode utterance summaries, frame-level azimuth via a
// monotone head-model lookup, and separation metrics.

#ifndef SAGRNN_CUE_EVAL_HPP_
#define SAGRNN_CUE_EVAL_HPP_

#include <array>
#include <vector>

#include "sagrnn/binaural_sim.hpp"
#include "sagrnn/gammatone.hpp"

namespace sagrnn {

inline constexpr double kFrameSeconds = 0.020;
inline constexpr double kHopSeconds = 0.010;
inline constexpr double kMaxLagSeconds = 0.001;   // +-1 ms search window
inline constexpr int kItdHistogramBins = 500;     // over +-1000 us
inline constexpr int kIldHistogramBins = 40;      // over +-20 dB
inline constexpr double kItdRangeUs = 1000.0;
inline constexpr double kIldRangeDb = 20.0;
inline constexpr double kEnergyFloor = 1e-10;
// Units within this many dB of the utterance's loudest unit qualify.
inline constexpr double kEnergyQualifyDb = 40.0;

struct CueUnit {
  double itd_us = 0.0;
  double ild_db = 0.0;
  double energy = 0.0;
  bool valid = false;
};

struct CueFrames {
  int64_t num_frames = 0;
  int num_channels = 0;
  std::vector<CueUnit> units;  // frame-major: units[f * channels + c]
  double max_energy = 0.0;

  const CueUnit& at(int64_t frame, int channel) const {
    return units[frame * num_channels + channel];
  }
};

// 20 ms frames at 10 ms hop; silent units (energy below kEnergyFloor)
// are marked invalid.
CueFrames frame_cues(const BinauralSignal& sig, const GammatoneBank& bank);

// Histogram mode of low-frequency-channel T-F ITDs, center of the
// highest bin. Throws UndefinedCueError when no unit qualifies.
double utterance_itd(const BinauralSignal& sig, const GammatoneBank& bank);
double utterance_itd(const CueFrames& frames, const GammatoneBank& bank);

// Histogram mode of one designated channel's T-F ILDs. `which` indexes
// the designated channel list (0..2).
double utterance_ild(const BinauralSignal& sig, const GammatoneBank& bank,
                     int which);
double utterance_ild(const CueFrames& frames, const GammatoneBank& bank,
                     int which);

// Energy-weighted median ITD per frame inverted through the head model;
// skipped frames carry NaN.
std::vector<double> azimuth_frames(const BinauralSignal& sig,
                                   const GammatoneBank& bank);
std::vector<double> azimuth_frames(const CueFrames& frames,
                                   const GammatoneBank& bank);

// Plain broadband level difference (no cochleagram), left over right.
double broadband_ild_db(const BinauralSignal& sig);

struct CueErrors {
  double itd_us = 0.0;
  std::array<double, 3> ild_db{};
  double azimuth_deg = 0.0;
};

// Absolute cue deltas between an estimate and its reference.
CueErrors cue_errors(const BinauralSignal& est, const BinauralSignal& ref,
                     const GammatoneBank& bank);

struct SepMetrics {
  double snr_improvement_db = 0.0;
  double si_snr_improvement_db = 0.0;
};

// Improvements of est over the unprocessed mixture, averaged over ears.
SepMetrics sep_metrics(const BinauralSignal& est, const BinauralSignal& ref,
                       const BinauralSignal& mixture, double epsilon = 1e-8);

}  // namespace sagrnn

#endif  // SAGRNN_CUE_EVAL_HPP_
