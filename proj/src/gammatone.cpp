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

#include "sagrnn/gammatone.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "sagrnn/errors.hpp"

namespace sagrnn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGammatoneOrder = 4.0;
// Bandwidth correction relating the gammatone's ERB to its exponential
// decay parameter.
constexpr double kErbToDecay = 1.019;

double erb_rate(double f) { return 21.4 * std::log10(4.37 * f / 1000.0 + 1.0); }
double erb_rate_inv(double e) {
  return (std::pow(10.0, e / 21.4) - 1.0) / 4.37 * 1000.0;
}

}  // namespace

double erb_hz(double freq_hz) {
  return 24.7 * (4.37 * freq_hz / 1000.0 + 1.0);
}

GammatoneBank::GammatoneBank(int sample_rate) : sample_rate_(sample_rate) {
  if (sample_rate != 8000) {
    throw ConfigError("gammatone bank is designed for 8 kHz input");
  }
  const double lo = erb_rate(80.0), hi = erb_rate(3800.0);
  centers_.resize(kChannels);
  bandwidths_.resize(kChannels);
  delays_.resize(kChannels);
  for (int c = 0; c < kChannels; ++c) {
    const double e = lo + (hi - lo) * c / (kChannels - 1);
    centers_[c] = erb_rate_inv(e);
    bandwidths_[c] = kErbToDecay * erb_hz(centers_[c]);
    // Envelope peak of t^(n-1) e^(-2 pi b t) sits at (n-1) / (2 pi b).
    const double t_peak = (kGammatoneOrder - 1.0) / (2.0 * kPi * bandwidths_[c]);
    delays_[c] = static_cast<int>(std::lround(t_peak * sample_rate_));
  }

  const double targets[3] = {2070.0, 3080.0, 3750.0};
  for (int k = 0; k < 3; ++k) {
    int best = 0;
    for (int c = 1; c < kChannels; ++c) {
      if (std::fabs(centers_[c] - targets[k]) <
          std::fabs(centers_[best] - targets[k])) {
        best = c;
      }
    }
    designated_[k] = best;
  }
  // ITD channels: the estimator needs the channel bandwidth times the
  // 20 ms frame to give at least ~2 independent samples for sub-sample
  // lag accuracy, which holds from roughly 500 Hz up; above ~1.5 kHz the
  // +-1 ms lag window aliases.
  for (int c = 0; c < kChannels; ++c) {
    if (centers_[c] >= 500.0 && centers_[c] < 1500.0) {
      low_channels_.push_back(c);
    }
  }
}

std::vector<std::vector<double>> GammatoneBank::analyze(
    const std::vector<double>& x) const {
  const int64_t t = static_cast<int64_t>(x.size());
  std::vector<std::vector<double>> out(kChannels);
  for (int c = 0; c < kChannels; ++c) {
    const double omega = 2.0 * kPi * centers_[c] / sample_rate_;
    const double a = std::exp(-2.0 * kPi * bandwidths_[c] / sample_rate_);
    const double one_minus_a = 1.0 - a;
    const std::complex<double> rot(std::cos(omega), -std::sin(omega));
    std::complex<double> carrier(1.0, 0.0);
    std::complex<double> w1(0.0), w2(0.0), w3(0.0), w4(0.0);
    const int delay = delays_[c];
    std::vector<double>& y = out[c];
    y.assign(t, 0.0);
    for (int64_t i = 0; i < t; ++i) {
      const std::complex<double> v = x[i] * carrier;  // demodulate
      w1 = one_minus_a * v + a * w1;
      w2 = one_minus_a * w1 + a * w2;
      w3 = one_minus_a * w2 + a * w3;
      w4 = one_minus_a * w3 + a * w4;
      // Remodulate; the factor 2 restores unit gain at the center
      // frequency for real inputs.
      const double sample = 2.0 * (w4 * std::conj(carrier)).real();
      const int64_t pos = i - delay;
      if (pos >= 0) y[pos] = sample;
      carrier *= rot;
      // Keep the recursive carrier on the unit circle.
      if ((i & 0x3ff) == 0x3ff) carrier /= std::abs(carrier);
    }
  }
  return out;
}

}  // namespace sagrnn
