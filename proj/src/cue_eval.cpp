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

#include "sagrnn/cue_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sagrnn/errors.hpp"
#include "sagrnn/loss.hpp"
#include "sagrnn/tensor.hpp"

namespace sagrnn {

namespace {

double qualify_threshold(double max_energy) {
  return max_energy * std::pow(10.0, -kEnergyQualifyDb / 10.0);
}

// Center of the highest-count bin; ties resolve to the lowest bin.
double histogram_mode(const std::vector<double>& values, int bins,
                      double range) {
  std::vector<int64_t> counts(bins, 0);
  const double width = 2.0 * range / bins;
  for (double v : values) {
    int idx = static_cast<int>(std::floor((v + range) / width));
    idx = std::clamp(idx, 0, bins - 1);
    ++counts[idx];
  }
  int best = 0;
  for (int i = 1; i < bins; ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  return -range + (best + 0.5) * width;
}

double mean_ignoring_nan(const std::vector<double>& v) {
  double acc = 0.0;
  int64_t n = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      acc += x;
      ++n;
    }
  }
  if (n == 0) throw UndefinedCueError("no defined frames");
  return acc / static_cast<double>(n);
}

// Monotone azimuth -> ITD table for inversion.
class ItdLookup {
 public:
  ItdLookup() {
    const int n = 3601;  // 0.05 degree grid
    az_.resize(n);
    itd_us_.resize(n);
    for (int i = 0; i < n; ++i) {
      az_[i] = -90.0 + 180.0 * i / (n - 1);
      itd_us_[i] = woodworth_itd(az_[i]) * 1e6;
    }
  }

  double azimuth_for(double itd_us) const {
    if (itd_us <= itd_us_.front()) return -90.0;
    if (itd_us >= itd_us_.back()) return 90.0;
    auto it = std::lower_bound(itd_us_.begin(), itd_us_.end(), itd_us);
    const size_t hi = static_cast<size_t>(it - itd_us_.begin());
    const size_t lo = hi - 1;
    const double span = itd_us_[hi] - itd_us_[lo];
    const double frac = span > 0.0 ? (itd_us - itd_us_[lo]) / span : 0.0;
    return az_[lo] + frac * (az_[hi] - az_[lo]);
  }

 private:
  std::vector<double> az_;
  std::vector<double> itd_us_;
};

const ItdLookup& itd_lookup() {
  static const ItdLookup table;
  return table;
}

}  // namespace

CueFrames frame_cues(const BinauralSignal& sig, const GammatoneBank& bank) {
  if (sig.left.size() != sig.right.size()) {
    throw DimensionError("frame_cues: ear length mismatch");
  }
  const int fs = bank.sample_rate();
  const int64_t frame_len = static_cast<int64_t>(kFrameSeconds * fs);
  const int64_t hop = static_cast<int64_t>(kHopSeconds * fs);
  const int max_lag = static_cast<int>(kMaxLagSeconds * fs);
  const double us_per_sample = 1e6 / fs;
  const int64_t t = sig.length();

  CueFrames out;
  out.num_channels = GammatoneBank::kChannels;
  out.num_frames = t >= frame_len ? (t - frame_len) / hop + 1 : 0;
  out.units.assign(out.num_frames * out.num_channels, CueUnit{});
  if (out.num_frames == 0) return out;

  const auto gl = bank.analyze(sig.left);
  const auto gr = bank.analyze(sig.right);

  for (int c = 0; c < out.num_channels; ++c) {
    const auto& l = gl[c];
    const auto& r = gr[c];
    for (int64_t f = 0; f < out.num_frames; ++f) {
      const int64_t start = f * hop;
      double e_l = 0.0, e_r = 0.0;
      for (int64_t i = start; i < start + frame_len; ++i) {
        e_l += l[i] * l[i];
        e_r += r[i] * r[i];
      }
      CueUnit unit;
      unit.energy = e_l + e_r;
      if (unit.energy < kEnergyFloor) {
        out.units[f * out.num_channels + c] = unit;
        continue;
      }
      unit.valid = true;
      unit.ild_db = 10.0 * std::log10((e_l + 1e-20) / (e_r + 1e-20));

      // Cross-correlation of the two frame windows over +-max_lag. Both
      // sides are truncated to the frame, which makes ear swapping an
      // exact mirror of the lag axis.
      const double norm = std::sqrt(e_l * e_r) + 1e-20;
      double best_val = -std::numeric_limits<double>::infinity();
      int best_lag = 0;
      std::vector<double> rho(2 * max_lag + 1, 0.0);
      for (int lag = -max_lag; lag <= max_lag; ++lag) {
        double acc = 0.0;
        const int64_t lo = start + std::max(0, -lag);
        const int64_t hi = start + frame_len - std::max(0, lag);
        for (int64_t i = lo; i < hi; ++i) {
          acc += l[i] * r[i + lag];
        }
        // Unbiased estimate: the shrinking overlap would otherwise tilt
        // the peak toward zero lag.
        const double count = static_cast<double>(hi - lo);
        const double v = acc * (static_cast<double>(frame_len) / count) / norm;
        rho[lag + max_lag] = v;
        if (v > best_val) {
          best_val = v;
          best_lag = lag;
        }
      }
      double refined = static_cast<double>(best_lag);
      if (best_lag > -max_lag && best_lag < max_lag) {
        const double ym = rho[best_lag - 1 + max_lag];
        const double y0 = rho[best_lag + max_lag];
        const double yp = rho[best_lag + 1 + max_lag];
        const double denom = ym - 2.0 * y0 + yp;
        if (std::fabs(denom) > 1e-18) {
          refined += 0.5 * (ym - yp) / denom;
        }
      }
      unit.itd_us = refined * us_per_sample;
      out.units[f * out.num_channels + c] = unit;
      out.max_energy = std::max(out.max_energy, unit.energy);
    }
  }
  return out;
}

namespace {

// Energy qualification is relative to the loudest unit among the units
// each statistic draws from, so a quiet high-frequency channel still
// forms a histogram while silence stays excluded.
double candidate_max_energy(const CueFrames& frames,
                            const std::vector<int>& channels) {
  double mx = 0.0;
  for (int64_t f = 0; f < frames.num_frames; ++f) {
    for (int c : channels) {
      const CueUnit& u = frames.at(f, c);
      if (u.valid) mx = std::max(mx, u.energy);
    }
  }
  return mx;
}

}  // namespace

double utterance_itd(const CueFrames& frames, const GammatoneBank& bank) {
  const double threshold =
      qualify_threshold(candidate_max_energy(frames, bank.low_freq_channels()));
  std::vector<double> values;
  for (int64_t f = 0; f < frames.num_frames; ++f) {
    for (int c : bank.low_freq_channels()) {
      const CueUnit& u = frames.at(f, c);
      if (u.valid && u.energy >= threshold) values.push_back(u.itd_us);
    }
  }
  if (values.empty()) {
    throw UndefinedCueError("utterance_itd: no qualifying units");
  }
  return histogram_mode(values, kItdHistogramBins, kItdRangeUs);
}

double utterance_itd(const BinauralSignal& sig, const GammatoneBank& bank) {
  return utterance_itd(frame_cues(sig, bank), bank);
}

double utterance_ild(const CueFrames& frames, const GammatoneBank& bank,
                     int which) {
  if (which < 0 || which >= 3) {
    throw UsageError("utterance_ild: designated channel index must be 0..2");
  }
  const int channel = bank.designated_ild_channels()[which];
  const double threshold =
      qualify_threshold(candidate_max_energy(frames, {channel}));
  std::vector<double> values;
  for (int64_t f = 0; f < frames.num_frames; ++f) {
    const CueUnit& u = frames.at(f, channel);
    if (u.valid && u.energy >= threshold) values.push_back(u.ild_db);
  }
  if (values.empty()) {
    throw UndefinedCueError("utterance_ild: no qualifying units");
  }
  return histogram_mode(values, kIldHistogramBins, kIldRangeDb);
}

double utterance_ild(const BinauralSignal& sig, const GammatoneBank& bank,
                     int which) {
  return utterance_ild(frame_cues(sig, bank), bank, which);
}

std::vector<double> azimuth_frames(const CueFrames& frames,
                                   const GammatoneBank& bank) {
  const double threshold =
      qualify_threshold(candidate_max_energy(frames, bank.low_freq_channels()));
  std::vector<double> out(frames.num_frames,
                          std::numeric_limits<double>::quiet_NaN());
  for (int64_t f = 0; f < frames.num_frames; ++f) {
    std::vector<std::pair<double, double>> itd_weight;  // (itd, energy)
    double total = 0.0;
    for (int c : bank.low_freq_channels()) {
      const CueUnit& u = frames.at(f, c);
      if (u.valid && u.energy >= threshold) {
        itd_weight.emplace_back(u.itd_us, u.energy);
        total += u.energy;
      }
    }
    if (itd_weight.empty()) continue;  // silent frame skipped
    std::sort(itd_weight.begin(), itd_weight.end());
    double acc = 0.0;
    double median = itd_weight.back().first;
    for (const auto& [itd, w] : itd_weight) {
      acc += w;
      if (acc >= 0.5 * total) {
        median = itd;
        break;
      }
    }
    out[f] = std::clamp(itd_lookup().azimuth_for(median), -90.0, 90.0);
  }
  return out;
}

std::vector<double> azimuth_frames(const BinauralSignal& sig,
                                   const GammatoneBank& bank) {
  return azimuth_frames(frame_cues(sig, bank), bank);
}

double broadband_ild_db(const BinauralSignal& sig) {
  double e_l = 0.0, e_r = 0.0;
  for (double v : sig.left) e_l += v * v;
  for (double v : sig.right) e_r += v * v;
  if (e_l <= 0.0 || e_r <= 0.0) {
    throw UndefinedCueError("broadband_ild_db: silent channel");
  }
  return 10.0 * std::log10(e_l / e_r);
}

CueErrors cue_errors(const BinauralSignal& est, const BinauralSignal& ref,
                     const GammatoneBank& bank) {
  if (est.length() != ref.length()) {
    throw DimensionError("cue_errors: length mismatch");
  }
  const CueFrames est_frames = frame_cues(est, bank);
  const CueFrames ref_frames = frame_cues(ref, bank);

  CueErrors out;
  out.itd_us = std::fabs(utterance_itd(est_frames, bank) -
                         utterance_itd(ref_frames, bank));
  for (int k = 0; k < 3; ++k) {
    out.ild_db[k] = std::fabs(utterance_ild(est_frames, bank, k) -
                              utterance_ild(ref_frames, bank, k));
  }
  const auto az_est = azimuth_frames(est_frames, bank);
  const auto az_ref = azimuth_frames(ref_frames, bank);
  std::vector<double> diffs(az_est.size(),
                            std::numeric_limits<double>::quiet_NaN());
  for (size_t f = 0; f < az_est.size(); ++f) {
    if (!std::isnan(az_est[f]) && !std::isnan(az_ref[f])) {
      diffs[f] = std::fabs(az_est[f] - az_ref[f]);
    }
  }
  out.azimuth_deg = mean_ignoring_nan(diffs);
  return out;
}

SepMetrics sep_metrics(const BinauralSignal& est, const BinauralSignal& ref,
                       const BinauralSignal& mixture, double epsilon) {
  if (est.length() != ref.length() || mixture.length() != ref.length()) {
    throw DimensionError("sep_metrics: length mismatch");
  }
  auto to_tensor = [](const std::vector<double>& v) {
    return Tensor({static_cast<int64_t>(v.size())}, v);
  };
  const Tensor el = to_tensor(est.left), er = to_tensor(est.right);
  const Tensor rl = to_tensor(ref.left), rr = to_tensor(ref.right);
  const Tensor ml = to_tensor(mixture.left), mr = to_tensor(mixture.right);

  SepMetrics out;
  out.snr_improvement_db =
      0.5 * ((snr_db(el, rl, epsilon) - snr_db(ml, rl, epsilon)) +
             (snr_db(er, rr, epsilon) - snr_db(mr, rr, epsilon)));
  out.si_snr_improvement_db =
      0.5 * ((si_snr_db(el, rl, epsilon) - si_snr_db(ml, rl, epsilon)) +
             (si_snr_db(er, rr, epsilon) - si_snr_db(mr, rr, epsilon)));
  return out;
}

}  // namespace sagrnn
