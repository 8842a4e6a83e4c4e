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
// Synthetic binaural scene generation with a spherical-head model:
// Woodworth ITD, sin-law broadband ILD, a far-ear shadow low-pass, and
// deterministic pseudo-speech sources. Azimuth convention: positive
// azimuth places the source toward the left ear, so the right ear lags
// (positive ITD) and the left ear is louder (positive ILD).

#ifndef SAGRNN_BINAURAL_SIM_HPP_
#define SAGRNN_BINAURAL_SIM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "sagrnn/wav.hpp"

namespace sagrnn {

inline constexpr int kSampleRate = 8000;
inline constexpr double kHeadRadiusM = 0.0875;
inline constexpr double kSpeedOfSound = 343.0;
inline constexpr double kIldSlopeDb = 10.0;  // broadband ILD at |az| = 90
inline constexpr int kHrirTaps = 33;

struct BinauralSignal {
  std::vector<double> left;
  std::vector<double> right;
  int sample_rate = kSampleRate;

  int64_t length() const { return static_cast<int64_t>(left.size()); }
};

// Arrival-time difference in seconds; positive means the right ear lags.
double woodworth_itd(double azimuth_deg);

// Broadband level difference (left over right) of the head model in dB.
double model_ild_db(double azimuth_deg);

struct Hrir {
  std::vector<double> left;   // kHrirTaps
  std::vector<double> right;  // kHrirTaps
};

// Fractional-delay windowed-sinc pair realizing +-itd/2, with the sin-law
// gains and a far-ear shadow low-pass whose cutoff falls from 4 kHz
// (frontal) to 1.5 kHz (lateral). Far-ear taps are scaled so the
// broadband (white-noise) ILD equals model_ild_db exactly.
Hrir synth_hrir(double azimuth_deg);

// Same-length binaural rendering (delay-compensated center tap).
BinauralSignal spatialize(const std::vector<double>& mono, double azimuth_deg);

// Deterministic pseudo-speech: pitch-modulated harmonic train, wandering
// formant resonators, syllabic amplitude modulation, unit RMS.
std::vector<double> synth_speech_like(uint64_t seed, double duration_s);

// Pink-ish filtered white noise at unit RMS.
std::vector<double> synth_noise(uint64_t seed, double duration_s);

// Scales both channels by one scalar so the left-ear SNR against the
// left-ear speech mixture hits snr_db exactly.
BinauralSignal scale_to_snr(const BinauralSignal& noise,
                            const std::vector<double>& speech_mix_left,
                            double snr_db);

struct SceneSpec {
  int sample_rate = kSampleRate;
  double duration_s = 0.5;
  std::vector<double> speaker_azimuths_deg;  // pairwise distinct
  std::vector<double> noise_azimuths_deg;    // distinct from all others
  double snr_db = 0.0;                       // left-ear noise SNR
  uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

struct SceneTruth {
  std::string id;
  SceneSpec spec;
  BinauralSignal mixture;
  std::vector<BinauralSignal> references;  // per speaker
  std::vector<double> itd_us;              // ground truth per speaker
  std::vector<double> ild_db;
};

SceneTruth make_scene(const SceneSpec& spec);

struct DatasetConfig {
  int sample_rate = kSampleRate;
  double duration_s = 0.5;
  int64_t num_speakers = 2;
  int64_t train_scenes = 8;
  int64_t valid_scenes = 2;
  int64_t test_scenes = 2;
  int64_t noise_count_min = 0;  // 0 disables noise
  int64_t noise_count_max = 0;
  double snr_db_min = -10.0;
  double snr_db_max = 10.0;
  double min_azimuth_sep_deg = 10.0;
  uint64_t seed = 1;

  void validate() const;
};

struct ManifestEntry {
  std::string id;
  std::string split;  // train | valid | test
  std::string mixture_path;
  std::vector<std::string> reference_paths;
  std::vector<double> azimuths_deg;
  int64_t noise_count = 0;
  double snr_db = 0.0;
  uint64_t seed = 0;
  std::vector<double> itd_us;
  std::vector<double> ild_db;
};

struct Manifest {
  int sample_rate = kSampleRate;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split(const std::string& name) const;
};

// Draws per-scene specs from disjoint per-split seed streams, renders
// every scene to WAV files under out_dir/<split>/, and writes
// out_dir/manifest.json. jobs > 1 renders scenes in parallel (output is
// identical for any job count).
Manifest gen_dataset(const DatasetConfig& config, const std::string& out_dir,
                     int jobs = 1);

void write_manifest(const Manifest& manifest, const std::string& path);
Manifest read_manifest(const std::string& path);

// Draws the scene spec for (config, split, index) without rendering.
SceneSpec sample_scene_spec(const DatasetConfig& config,
                            const std::string& split, int64_t index);

}  // namespace sagrnn

#endif  // SAGRNN_BINAURAL_SIM_HPP_
