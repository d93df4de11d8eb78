// src/pitch.cpp

// Copyright 2026  LFE-Kit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// YIN pitch tracking (difference function with cumulative mean
// normalization), one estimate per analysis frame.  Output columns are
// voicing score, interpolated log-F0, and its delta.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "lfe/common.hpp"
#include "lfe/features.hpp"

namespace lfe {

namespace {

constexpr double kMinF0Hz = 60.0;
constexpr double kMaxF0Hz = 400.0;
constexpr double kYinThreshold = 0.35;
constexpr double kDefaultF0Hz = 150.0;  // used when nothing is voiced

struct FramePitch {
  bool voiced = false;
  double voicing = 0.0;  // max(0, 1 - min normalized difference)
  double f0_hz = 0.0;
};

// Normalized difference over lags [1, max_lag]; d'(1..) with d'(tau) =
// d(tau) * tau / sum_{j<=tau} d(j), and 0/0 treated as 1.
std::vector<double> cumulative_mean_normalized_difference(
    const float* x, int window, int max_lag) {
  std::vector<double> cmnd(max_lag + 1, 1.0);
  double running_sum = 0.0;
  for (int tau = 1; tau <= max_lag; ++tau) {
    double d = 0.0;
    for (int j = 0; j < window; ++j) {
      const double diff = static_cast<double>(x[j]) - x[j + tau];
      d += diff * diff;
    }
    running_sum += d;
    cmnd[tau] = running_sum > 0.0 ? d * tau / running_sum : 1.0;
  }
  return cmnd;
}

FramePitch analyze_frame(const float* x, int window, int min_lag, int max_lag,
                         int sample_rate_hz) {
  FramePitch out;
  if (max_lag < min_lag) return out;  // not enough lookahead, stays unvoiced

  const auto cmnd =
      cumulative_mean_normalized_difference(x, window, max_lag);

  // First lag under threshold, then descend to its local minimum; fall back
  // to the global minimum when nothing dips below.
  int pick = -1;
  for (int tau = min_lag; tau <= max_lag; ++tau) {
    if (cmnd[tau] < kYinThreshold) {
      pick = tau;
      while (pick + 1 <= max_lag && cmnd[pick + 1] < cmnd[pick]) ++pick;
      break;
    }
  }
  if (pick < 0) {
    pick = min_lag;
    for (int tau = min_lag + 1; tau <= max_lag; ++tau)
      if (cmnd[tau] < cmnd[pick]) pick = tau;
  }

  const double dip = cmnd[pick];
  out.voicing = std::max(0.0, 1.0 - dip);
  out.voiced = dip < kYinThreshold;

  // Parabolic refinement around the picked lag.
  double tau_star = pick;
  if (pick > 1 && pick < max_lag) {
    const double a = cmnd[pick - 1], b = cmnd[pick], c = cmnd[pick + 1];
    const double den = a - 2.0 * b + c;
    if (std::abs(den) > 1e-12) {
      const double shift = 0.5 * (a - c) / den;
      if (std::abs(shift) <= 1.0) tau_star = pick + shift;
    }
  }
  out.f0_hz = sample_rate_hz / tau_star;
  return out;
}

// Linear interpolation of log-F0 across unvoiced stretches; edges copy the
// nearest voiced value.
std::vector<double> interpolate_log_f0(const std::vector<FramePitch>& frames) {
  const int T = static_cast<int>(frames.size());
  std::vector<double> log_f0(T, std::log(kDefaultF0Hz));
  std::vector<int> voiced_idx;
  for (int t = 0; t < T; ++t)
    if (frames[t].voiced) voiced_idx.push_back(t);
  if (voiced_idx.empty()) return log_f0;

  for (int t : voiced_idx) log_f0[t] = std::log(frames[t].f0_hz);
  for (int t = 0; t < voiced_idx.front(); ++t)
    log_f0[t] = log_f0[voiced_idx.front()];
  for (int t = voiced_idx.back() + 1; t < T; ++t)
    log_f0[t] = log_f0[voiced_idx.back()];
  for (std::size_t i = 0; i + 1 < voiced_idx.size(); ++i) {
    const int lo = voiced_idx[i], hi = voiced_idx[i + 1];
    for (int t = lo + 1; t < hi; ++t) {
      const double a = static_cast<double>(t - lo) / (hi - lo);
      log_f0[t] = (1.0 - a) * log_f0[lo] + a * log_f0[hi];
    }
  }
  return log_f0;
}

}  // namespace

FloatRowMat compute_pitch(std::span<const float> samples,
                          const FeatureConfig& cfg) {
  const int flen = cfg.frame_length();
  const int fshift = cfg.frame_shift();
  if (static_cast<int>(samples.size()) < flen)
    raise(ErrorCode::kTooShort, "utterance has ", samples.size(),
          " samples, below one frame of ", flen);
  const int n_frames = (static_cast<int>(samples.size()) - flen) / fshift + 1;
  const int min_lag =
      static_cast<int>(std::ceil(cfg.sample_rate_hz / kMaxF0Hz));
  const int full_max_lag =
      static_cast<int>(std::floor(cfg.sample_rate_hz / kMinF0Hz));

  std::vector<FramePitch> frames(n_frames);
  for (int t = 0; t < n_frames; ++t) {
    const int start = t * fshift;
    // Lags are limited by the samples left after the window.
    const int avail = static_cast<int>(samples.size()) - start - flen;
    const int max_lag = std::min(full_max_lag, avail);
    frames[t] = analyze_frame(samples.data() + start, flen, min_lag, max_lag,
                              cfg.sample_rate_hz);
  }

  const std::vector<double> log_f0 = interpolate_log_f0(frames);

  FloatRowMat out(n_frames, 3);
  constexpr double kDen = 10.0;  // same +-2 regression as cepstral deltas
  for (int t = 0; t < n_frames; ++t) {
    double acc = 0.0;
    for (int k = 1; k <= 2; ++k) {
      const int hi = std::min(t + k, n_frames - 1);
      const int lo = std::max(t - k, 0);
      acc += k * (log_f0[hi] - log_f0[lo]);
    }
    out(t, 0) = static_cast<float>(frames[t].voicing);
    out(t, 1) = static_cast<float>(log_f0[t]);
    out(t, 2) = static_cast<float>(acc / kDen);
  }
  return out;
}

}  // namespace lfe
