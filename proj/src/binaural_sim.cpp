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

#include "sagrnn/binaural_sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"
#include "sagrnn/errors.hpp"
#include "sagrnn/rng.hpp"

namespace sagrnn {

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double deg) { return deg * kPi / 180.0; }

double energy_of(const std::vector<double>& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

}  // namespace

double woodworth_itd(double azimuth_deg) {
  if (std::fabs(azimuth_deg) > 90.0) {
    throw ConfigError("woodworth_itd: |azimuth| must be <= 90 degrees");
  }
  const double a = std::fabs(deg2rad(azimuth_deg));
  const double itd = (kHeadRadiusM / kSpeedOfSound) * (a + std::sin(a));
  return azimuth_deg >= 0.0 ? itd : -itd;
}

double model_ild_db(double azimuth_deg) {
  return kIldSlopeDb * std::sin(deg2rad(azimuth_deg));
}

namespace {

// Windowed-sinc fractional delay of `delay` samples, centered on the
// middle tap. The Blackman window tracks the sinc peak so mirrored
// delays have identical tap energy.
std::vector<double> fractional_delay_taps(double delay_samples) {
  std::vector<double> taps(kHrirTaps, 0.0);
  const double center = (kHrirTaps - 1) / 2.0 + delay_samples;
  for (int k = 0; k < kHrirTaps; ++k) {
    const double x = k - center;
    const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
    const double u = x / (kHrirTaps / 2.0);
    double w = 0.0;
    if (std::fabs(u) <= 1.0) {
      w = 0.42 + 0.5 * std::cos(kPi * u) + 0.08 * std::cos(2.0 * kPi * u);
    }
    taps[k] = sinc * w;
  }
  return taps;
}

// Shadow shelf: one-pole low-pass mixed with a direct leak path, so the
// response falls from unity at DC to about the leak level (-6 dB) at
// high frequency. A full one-pole tilts the spectrum so strongly that
// speech-weighted broadband levels drift past the 1 dB closed-loop
// budget; the leak bounds that drift while keeping the per-channel ILD
// frequency dependence.
constexpr double kShadowLeak = 0.5;

std::vector<double> shadow_impulse(double cutoff_hz, int len) {
  const double a = std::exp(-2.0 * kPi * cutoff_hz / kSampleRate);
  std::vector<double> h(len);
  double coeff = (1.0 - kShadowLeak) * (1.0 - a);
  for (int i = 0; i < len; ++i) {
    h[i] = coeff;
    coeff *= a;
  }
  h[0] += kShadowLeak;
  return h;
}

std::vector<double> convolve_truncated(const std::vector<double>& a,
                                       const std::vector<double>& b,
                                       int len) {
  std::vector<double> out(len, 0.0);
  for (int i = 0; i < len; ++i) {
    double acc = 0.0;
    for (size_t j = 0; j < b.size() && j <= static_cast<size_t>(i); ++j) {
      const size_t ai = i - j;
      if (ai < a.size()) acc += a[ai] * b[j];
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace

Hrir synth_hrir(double azimuth_deg) {
  if (std::fabs(azimuth_deg) > 90.0) {
    throw ConfigError("synth_hrir: |azimuth| must be <= 90 degrees");
  }
  const double itd_samples = woodworth_itd(azimuth_deg) * kSampleRate;
  Hrir h;
  h.left = fractional_delay_taps(-itd_samples / 2.0);
  h.right = fractional_delay_taps(+itd_samples / 2.0);

  if (azimuth_deg != 0.0) {
    // Head shadow on the far ear: cutoff falls linearly with |azimuth|.
    const double cutoff = 4000.0 - 2500.0 * std::fabs(azimuth_deg) / 90.0;
    const auto shadow = shadow_impulse(cutoff, kHrirTaps);
    std::vector<double>& far = azimuth_deg > 0.0 ? h.right : h.left;
    far = convolve_truncated(far, shadow, kHrirTaps);
  }

  // Sin-law gains; afterwards pin the tap-energy ratio to the model ILD
  // exactly so the shadow only shapes the spectrum.
  const double ild = model_ild_db(azimuth_deg);
  const double g_left = std::pow(10.0, +ild / 40.0);
  const double g_right = std::pow(10.0, -ild / 40.0);
  for (auto& v : h.left) v *= g_left;
  for (auto& v : h.right) v *= g_right;

  const double e_left = energy_of(h.left);
  const double e_right = energy_of(h.right);
  const double target_ratio = std::pow(10.0, ild / 10.0);  // E_L / E_R
  const double fix = std::sqrt(e_left / (target_ratio * e_right));
  for (auto& v : h.right) v *= fix;
  return h;
}

BinauralSignal spatialize(const std::vector<double>& mono,
                          double azimuth_deg) {
  const Hrir h = synth_hrir(azimuth_deg);
  const int center = (kHrirTaps - 1) / 2;
  const int64_t t = static_cast<int64_t>(mono.size());
  BinauralSignal out;
  out.left.assign(t, 0.0);
  out.right.assign(t, 0.0);
  for (int64_t i = 0; i < t; ++i) {
    double acc_l = 0.0, acc_r = 0.0;
    for (int k = 0; k < kHrirTaps; ++k) {
      const int64_t j = i - k + center;
      if (j < 0 || j >= t) continue;
      acc_l += h.left[k] * mono[j];
      acc_r += h.right[k] * mono[j];
    }
    out.left[i] = acc_l;
    out.right[i] = acc_r;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sources

std::vector<double> synth_speech_like(uint64_t seed, double duration_s) {
  if (duration_s <= 0.0) throw ConfigError("synth_speech_like: duration <= 0");
  const int64_t t = static_cast<int64_t>(std::llround(duration_s * kSampleRate));
  Rng rng(derive_seed(seed, 0x73706565ull));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double f0_mid = 110.0 + 80.0 * unit(rng);
  const double f0_rate = 0.2 + 0.4 * unit(rng);
  const double f0_phase = 2.0 * kPi * unit(rng);
  const double syllable_rate = 3.0 + 3.0 * unit(rng);
  const double syllable_phase = 2.0 * kPi * unit(rng);

  // Formant tracks wander sinusoidally inside fixed bands.
  struct Formant {
    double lo, hi, rate, phase;
  };
  Formant formants[3] = {
      {350.0, 750.0, 0.1 + 0.4 * unit(rng), 2.0 * kPi * unit(rng)},
      {950.0, 2100.0, 0.1 + 0.4 * unit(rng), 2.0 * kPi * unit(rng)},
      {2350.0, 3150.0, 0.1 + 0.4 * unit(rng), 2.0 * kPi * unit(rng)},
  };

  std::vector<double> x(t, 0.0);
  double phase_acc = 2.0 * kPi * unit(rng);
  for (int64_t i = 0; i < t; ++i) {
    const double time = static_cast<double>(i) / kSampleRate;
    double f0 = f0_mid * (1.0 + 0.25 * std::sin(2.0 * kPi * f0_rate * time +
                                                f0_phase));
    f0 = std::clamp(f0, 90.0, 220.0);
    phase_acc += 2.0 * kPi * f0 / kSampleRate;
    const int harmonics =
        std::min<int>(24, static_cast<int>(3600.0 / f0));
    double v = 0.0;
    for (int hnum = 1; hnum <= harmonics; ++hnum) {
      v += std::sin(hnum * phase_acc) / hnum;
    }
    x[i] = v;
  }

  // Series resonators, coefficients refreshed every 10 ms.
  const double r = 0.96;
  for (const Formant& fm : formants) {
    std::vector<double> y(t, 0.0);
    double y1 = 0.0, y2 = 0.0;
    double b1 = 0.0, b2 = -r * r, g = 1.0;
    for (int64_t i = 0; i < t; ++i) {
      if (i % 80 == 0) {
        const double time = static_cast<double>(i) / kSampleRate;
        const double center =
            0.5 * (fm.lo + fm.hi) +
            0.5 * (fm.hi - fm.lo) *
                std::sin(2.0 * kPi * fm.rate * time + fm.phase);
        const double omega = 2.0 * kPi * center / kSampleRate;
        b1 = 2.0 * r * std::cos(omega);
        g = (1.0 - r) * std::sqrt(1.0 - r * std::cos(2.0 * omega) + r * r);
      }
      const double v = g * x[i] + b1 * y1 + b2 * y2;
      y2 = y1;
      y1 = v;
      y[i] = v;
    }
    x.swap(y);
  }

  for (int64_t i = 0; i < t; ++i) {
    const double time = static_cast<double>(i) / kSampleRate;
    const double env =
        0.2 + 0.8 * (0.5 + 0.5 * std::sin(2.0 * kPi * syllable_rate * time +
                                          syllable_phase));
    x[i] *= env;
  }

  const double rms = std::sqrt(energy_of(x) / static_cast<double>(t));
  if (rms > 0.0) {
    const double inv = 1.0 / rms;
    for (auto& v : x) v *= inv;
  }
  return x;
}

std::vector<double> synth_noise(uint64_t seed, double duration_s) {
  if (duration_s <= 0.0) throw ConfigError("synth_noise: duration <= 0");
  const int64_t t = static_cast<int64_t>(std::llround(duration_s * kSampleRate));
  Rng rng(derive_seed(seed, 0x6e6f697365ull));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(t);
  // Paul Kellet's pink-noise filter over white Gaussian input.
  double b0 = 0, b1 = 0, b2 = 0;
  for (int64_t i = 0; i < t; ++i) {
    const double w = gauss(rng);
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    x[i] = b0 + b1 + b2 + w * 0.1848;
  }
  const double rms = std::sqrt(energy_of(x) / static_cast<double>(t));
  const double inv = 1.0 / rms;
  for (auto& v : x) v *= inv;
  return x;
}

BinauralSignal scale_to_snr(const BinauralSignal& noise,
                            const std::vector<double>& speech_mix_left,
                            double snr_db) {
  const double e_noise = energy_of(noise.left);
  if (e_noise <= 0.0) {
    throw UsageError("scale_to_snr: silent noise");
  }
  const double e_speech = energy_of(speech_mix_left);
  const double k =
      std::sqrt(e_speech / (e_noise * std::pow(10.0, snr_db / 10.0)));
  BinauralSignal out = noise;
  for (auto& v : out.left) v *= k;
  for (auto& v : out.right) v *= k;
  return out;
}

// ---------------------------------------------------------------------------
// Scenes

void SceneSpec::validate() const {
  if (duration_s <= 0.0) throw ConfigError("scene: duration must be positive");
  if (speaker_azimuths_deg.empty()) {
    throw ConfigError("scene: at least one speaker required");
  }
  if (noise_azimuths_deg.size() > 10) {
    throw ConfigError("scene: at most 10 noise sources");
  }
  std::vector<double> all = speaker_azimuths_deg;
  all.insert(all.end(), noise_azimuths_deg.begin(), noise_azimuths_deg.end());
  for (double az : all) {
    if (std::fabs(az) > 90.0) {
      throw ConfigError("scene: |azimuth| must be <= 90 degrees");
    }
  }
  for (size_t i = 0; i < all.size(); ++i) {
    for (size_t j = i + 1; j < all.size(); ++j) {
      if (all[i] == all[j]) {
        throw ConfigError("scene: source directions must be distinct");
      }
    }
  }
}

SceneTruth make_scene(const SceneSpec& spec) {
  spec.validate();
  SceneTruth out;
  out.spec = spec;

  const int64_t t =
      static_cast<int64_t>(std::llround(spec.duration_s * kSampleRate));
  std::vector<double> speech_left_sum(t, 0.0);
  for (size_t i = 0; i < spec.speaker_azimuths_deg.size(); ++i) {
    const auto mono =
        synth_speech_like(derive_seed(spec.seed, 1, i), spec.duration_s);
    BinauralSignal ref = spatialize(mono, spec.speaker_azimuths_deg[i]);
    for (int64_t s = 0; s < t; ++s) speech_left_sum[s] += ref.left[s];
    out.itd_us.push_back(woodworth_itd(spec.speaker_azimuths_deg[i]) * 1e6);
    out.ild_db.push_back(model_ild_db(spec.speaker_azimuths_deg[i]));
    out.references.push_back(std::move(ref));
  }

  out.mixture.left.assign(t, 0.0);
  out.mixture.right.assign(t, 0.0);
  for (const auto& ref : out.references) {
    for (int64_t s = 0; s < t; ++s) {
      out.mixture.left[s] += ref.left[s];
      out.mixture.right[s] += ref.right[s];
    }
  }

  if (!spec.noise_azimuths_deg.empty()) {
    BinauralSignal noise_sum;
    noise_sum.left.assign(t, 0.0);
    noise_sum.right.assign(t, 0.0);
    for (size_t j = 0; j < spec.noise_azimuths_deg.size(); ++j) {
      const auto mono =
          synth_noise(derive_seed(spec.seed, 2, j), spec.duration_s);
      BinauralSignal sp = spatialize(mono, spec.noise_azimuths_deg[j]);
      for (int64_t s = 0; s < t; ++s) {
        noise_sum.left[s] += sp.left[s];
        noise_sum.right[s] += sp.right[s];
      }
    }
    BinauralSignal scaled = scale_to_snr(noise_sum, speech_left_sum,
                                         spec.snr_db);
    for (int64_t s = 0; s < t; ++s) {
      out.mixture.left[s] += scaled.left[s];
      out.mixture.right[s] += scaled.right[s];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Datasets

void DatasetConfig::validate() const {
  if (num_speakers < 1) throw ConfigError("dataset: num_speakers < 1");
  if (duration_s <= 0.0) throw ConfigError("dataset: duration <= 0");
  if (noise_count_min < 0 || noise_count_max > 10 ||
      noise_count_min > noise_count_max) {
    throw ConfigError("dataset: noise count range invalid (0..10)");
  }
  if (snr_db_min > snr_db_max) throw ConfigError("dataset: SNR range invalid");
  if (train_scenes < 0 || valid_scenes < 0 || test_scenes < 0) {
    throw ConfigError("dataset: negative scene count");
  }
  if (min_azimuth_sep_deg < 0.0 ||
      min_azimuth_sep_deg * static_cast<double>(num_speakers +
                                                noise_count_max) >
          150.0) {
    throw ConfigError("dataset: azimuth separation infeasible");
  }
}

namespace {

uint64_t split_stream(const std::string& split) {
  if (split == "train") return 10;
  if (split == "valid") return 20;
  if (split == "test") return 30;
  throw ConfigError("unknown split: " + split);
}

}  // namespace

SceneSpec sample_scene_spec(const DatasetConfig& config,
                            const std::string& split, int64_t index) {
  config.validate();
  SceneSpec spec;
  spec.sample_rate = config.sample_rate;
  spec.duration_s = config.duration_s;
  spec.seed = derive_seed(config.seed, split_stream(split), index);

  Rng rng(derive_seed(spec.seed, 3));
  std::uniform_real_distribution<double> az_dist(-90.0, 90.0);
  std::uniform_real_distribution<double> snr_dist(config.snr_db_min,
                                                  config.snr_db_max);

  int64_t noise_count = config.noise_count_min;
  if (config.noise_count_max > config.noise_count_min) {
    std::uniform_int_distribution<int64_t> nc(config.noise_count_min,
                                              config.noise_count_max);
    noise_count = nc(rng);
  }
  const int64_t total = config.num_speakers + noise_count;
  std::vector<double> azimuths;
  int guard = 0;
  while (static_cast<int64_t>(azimuths.size()) < total) {
    if (++guard > 100000) {
      throw ConfigError("dataset: azimuth sampling did not converge");
    }
    const double az = az_dist(rng);
    bool ok = true;
    for (double prev : azimuths) {
      if (std::fabs(prev - az) < config.min_azimuth_sep_deg) {
        ok = false;
        break;
      }
    }
    if (ok) azimuths.push_back(az);
  }
  spec.speaker_azimuths_deg.assign(azimuths.begin(),
                                   azimuths.begin() + config.num_speakers);
  spec.noise_azimuths_deg.assign(azimuths.begin() + config.num_speakers,
                                 azimuths.end());
  spec.snr_db = noise_count > 0 ? snr_dist(rng) : 0.0;
  return spec;
}

std::vector<const ManifestEntry*> Manifest::split(
    const std::string& name) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == name) out.push_back(&e);
  }
  return out;
}

void write_manifest(const Manifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["sample_rate"] = manifest.sample_rate;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::json je;
    je["id"] = e.id;
    je["split"] = e.split;
    je["paths"] = {{"mixture", e.mixture_path},
                   {"references", e.reference_paths}};
    je["azimuths_deg"] = e.azimuths_deg;
    je["noise_count"] = e.noise_count;
    je["snr_db"] = e.snr_db;
    je["seed"] = e.seed;
    je["ground_truth"] = {{"itd_us", e.itd_us}, {"ild_db", e.ild_db}};
    j["entries"].push_back(std::move(je));
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
  if (!f) throw IoError("write failed: " + path);
}

Manifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: parse error: ") + e.what());
  }
  Manifest m;
  try {
    m.sample_rate = j.at("sample_rate").get<int>();
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.id = je.at("id").get<std::string>();
      e.split = je.at("split").get<std::string>();
      e.mixture_path = je.at("paths").at("mixture").get<std::string>();
      e.reference_paths =
          je.at("paths").at("references").get<std::vector<std::string>>();
      e.azimuths_deg = je.at("azimuths_deg").get<std::vector<double>>();
      e.noise_count = je.at("noise_count").get<int64_t>();
      e.snr_db = je.at("snr_db").get<double>();
      e.seed = je.at("seed").get<uint64_t>();
      e.itd_us = je.at("ground_truth").at("itd_us").get<std::vector<double>>();
      e.ild_db = je.at("ground_truth").at("ild_db").get<std::vector<double>>();
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: bad field: ") + e.what());
  }
  return m;
}

Manifest gen_dataset(const DatasetConfig& config, const std::string& out_dir,
                     int jobs) {
  config.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir);

  struct Planned {
    std::string split;
    int64_t index;
  };
  std::vector<Planned> plan;
  const std::vector<std::pair<std::string, int64_t>> splits = {
      {"train", config.train_scenes},
      {"valid", config.valid_scenes},
      {"test", config.test_scenes}};
  for (const auto& [split, count] : splits) {
    fs::create_directories(fs::path(out_dir) / split, ec);
    if (ec) throw IoError("cannot create split directory: " + split);
    for (int64_t i = 0; i < count; ++i) plan.push_back({split, i});
  }

  Manifest manifest;
  manifest.sample_rate = config.sample_rate;
  manifest.entries.resize(plan.size());

  const int64_t n = static_cast<int64_t>(plan.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(std::max(1, jobs))
#endif
  for (int64_t i = 0; i < n; ++i) {
    const auto& [split, index] = plan[i];
    const SceneSpec spec = sample_scene_spec(config, split, index);
    const SceneTruth scene = make_scene(spec);

    const std::string base = split + "/scene_" + std::to_string(index);
    ManifestEntry e;
    e.id = split + "_" + std::to_string(index);
    e.split = split;
    e.mixture_path = base + "_mix.wav";
    e.azimuths_deg = spec.speaker_azimuths_deg;
    e.noise_count = static_cast<int64_t>(spec.noise_azimuths_deg.size());
    e.snr_db = spec.snr_db;
    e.seed = spec.seed;
    e.itd_us = scene.itd_us;
    e.ild_db = scene.ild_db;

    WavData mix;
    mix.sample_rate = config.sample_rate;
    mix.channels = {scene.mixture.left, scene.mixture.right};
    write_wav((fs::path(out_dir) / e.mixture_path).string(), mix);
    for (size_t k = 0; k < scene.references.size(); ++k) {
      const std::string ref_path =
          base + "_spk" + std::to_string(k) + ".wav";
      WavData ref;
      ref.sample_rate = config.sample_rate;
      ref.channels = {scene.references[k].left, scene.references[k].right};
      write_wav((fs::path(out_dir) / ref_path).string(), ref);
      e.reference_paths.push_back(ref_path);
    }
    manifest.entries[i] = std::move(e);
  }
  (void)jobs;

  write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

}  // namespace sagrnn
