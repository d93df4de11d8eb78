// src/features.cpp

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

#include "lfe/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "lfe/io.hpp"
#include "lfe/wav.hpp"

namespace lfe {

namespace dsp {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft(std::vector<std::complex<double>>& buf, bool inverse) {
  const std::size_t n = buf.size();
  if (n == 0 || (n & (n - 1)) != 0)
    raise(ErrorCode::kInvalidSpec, "fft size must be a power of two, got ", n);
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(buf[i], buf[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang =
        2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1 : -1);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = buf[i + k];
        const std::complex<double> v = buf[i + k + len / 2] * w;
        buf[i + k] = u + v;
        buf[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& x : buf) x /= static_cast<double>(n);
  }
}

double hz_to_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * std::expm1(mel / 1127.0); }

MelFilterbank make_mel_filterbank(int n_filters, int n_fft, int sample_rate_hz,
                                  double low_hz, double high_hz) {
  if (high_hz <= 0.0) high_hz = sample_rate_hz / 2.0;
  if (n_filters < 1 || low_hz < 0.0 || high_hz <= low_hz ||
      high_hz > sample_rate_hz / 2.0)
    raise(ErrorCode::kInvalidSpec, "bad mel filterbank parameters");

  const double mel_low = hz_to_mel(low_hz);
  const double mel_high = hz_to_mel(high_hz);
  // n_filters triangles need n_filters + 2 equally spaced mel points.
  std::vector<double> edges(n_filters + 2);
  for (int i = 0; i < n_filters + 2; ++i)
    edges[i] = mel_low + (mel_high - mel_low) * i / (n_filters + 1);

  MelFilterbank fb;
  fb.n_fft = n_fft;
  fb.filters.resize(n_filters);
  fb.center_hz.resize(n_filters);
  const double bin_hz = static_cast<double>(sample_rate_hz) / n_fft;
  for (int f = 0; f < n_filters; ++f) {
    const double left = edges[f], center = edges[f + 1], right = edges[f + 2];
    fb.center_hz[f] = mel_to_hz(center);
    for (int bin = 0; bin <= n_fft / 2; ++bin) {
      const double mel = hz_to_mel(bin * bin_hz);
      double w = 0.0;
      if (mel > left && mel < right) {
        w = mel <= center ? (mel - left) / (center - left)
                          : (right - mel) / (right - center);
      }
      if (w > 0.0) fb.filters[f].emplace_back(bin, w);
    }
  }
  return fb;
}

Eigen::VectorXd MelFilterbank::apply(
    const Eigen::VectorXd& power_spectrum) const {
  if (power_spectrum.size() != n_fft / 2 + 1)
    raise(ErrorCode::kDimensionMismatch, "power spectrum has ",
          power_spectrum.size(), " bins, filterbank expects ", n_fft / 2 + 1);
  Eigen::VectorXd out(static_cast<Eigen::Index>(filters.size()));
  for (std::size_t f = 0; f < filters.size(); ++f) {
    double acc = 0.0;
    for (const auto& [bin, w] : filters[f]) acc += w * power_spectrum[bin];
    out[static_cast<Eigen::Index>(f)] = acc;
  }
  return out;
}

Eigen::MatrixXd dct_matrix(int n_out, int n_in) {
  if (n_out < 1 || n_out > n_in)
    raise(ErrorCode::kInvalidSpec, "dct_matrix: need 1 <= n_out <= n_in");
  Eigen::MatrixXd m(n_out, n_in);
  const double norm0 = std::sqrt(1.0 / n_in);
  const double norm = std::sqrt(2.0 / n_in);
  for (int k = 0; k < n_out; ++k) {
    for (int n = 0; n < n_in; ++n) {
      m(k, n) = (k == 0 ? norm0 : norm) *
                std::cos(std::numbers::pi * k * (2 * n + 1) / (2.0 * n_in));
    }
  }
  return m;
}

}  // namespace dsp

std::string FeatureConfig::config_hash() const {
  // Canonical text form so that equal configs hash equally across builds.
  std::ostringstream os;
  os << "sr=" << sample_rate_hz << ";len=" << frame_length_ms
     << ";shift=" << frame_shift_ms << ";mel=" << n_mel_filters
     << ";cep=" << n_cepstra << ";pre=" << preemphasis
     << ";deltas=" << (add_deltas ? 1 : 0) << ";pitch=" << (add_pitch ? 1 : 0)
     << ";cmn=" << (cmn ? 1 : 0);
  return to_hex16(fnv1a64(os.str()));
}

FeatureMatrix compute_mfcc(std::span<const float> samples,
                           const FeatureConfig& cfg) {
  const int flen = cfg.frame_length();
  const int fshift = cfg.frame_shift();
  if (static_cast<int>(samples.size()) < flen)
    raise(ErrorCode::kTooShort, "utterance has ", samples.size(),
          " samples, below one frame of ", flen);
  const int n_frames =
      (static_cast<int>(samples.size()) - flen) / fshift + 1;

  const int n_fft = static_cast<int>(dsp::next_pow2(flen));
  const auto fb = dsp::make_mel_filterbank(cfg.n_mel_filters, n_fft,
                                           cfg.sample_rate_hz);
  const Eigen::MatrixXd dct = dsp::dct_matrix(cfg.n_cepstra, cfg.n_mel_filters);

  Eigen::VectorXd window(flen);
  for (int i = 0; i < flen; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (flen - 1));

  FeatureMatrix out;
  out.data.resize(n_frames, cfg.n_cepstra);

  std::vector<std::complex<double>> buf(n_fft);
  Eigen::VectorXd frame(flen), power(n_fft / 2 + 1);
  for (int t = 0; t < n_frames; ++t) {
    const float* src = samples.data() + static_cast<std::size_t>(t) * fshift;
    // Raw frame energy, before pre-emphasis and windowing; this replaces c0.
    double energy = 0.0;
    for (int i = 0; i < flen; ++i)
      energy += static_cast<double>(src[i]) * src[i];
    const double log_energy = std::log(std::max(energy, kLogFloor));

    frame[0] = src[0] * (1.0 - cfg.preemphasis);
    for (int i = 1; i < flen; ++i)
      frame[i] = src[i] - cfg.preemphasis * src[i - 1];
    frame.array() *= window.array();

    for (int i = 0; i < flen; ++i) buf[i] = {frame[i], 0.0};
    for (int i = flen; i < n_fft; ++i) buf[i] = {0.0, 0.0};
    dsp::fft(buf);
    for (int i = 0; i <= n_fft / 2; ++i) power[i] = std::norm(buf[i]);

    Eigen::VectorXd mel = fb.apply(power);
    for (int i = 0; i < mel.size(); ++i)
      mel[i] = std::log(std::max(mel[i], kLogFloor));
    Eigen::VectorXd cep = dct * mel;
    cep[0] = log_energy;
    out.data.row(t) = cep.cast<float>().transpose();
  }
  return out;
}

FeatureMatrix append_deltas(const FeatureMatrix& m) {
  const int T = m.n_frames();
  const int D = m.dim();
  if (T == 0) raise(ErrorCode::kTooFewFrames, "append_deltas on empty matrix");

  // delta_t = sum_k k*(x[t+k]-x[t-k]) / (2*sum_k k^2) over k in {1,2},
  // with frame indices clamped at the edges.
  auto delta_of = [T, D](const FloatRowMat& x) {
    FloatRowMat d(T, D);
    constexpr double kDen = 10.0;  // 2*(1^2+2^2)
    for (int t = 0; t < T; ++t) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(D);
      for (int k = 1; k <= 2; ++k) {
        const int hi = std::min(t + k, T - 1);
        const int lo = std::max(t - k, 0);
        acc += k * (x.row(hi).cast<double>() - x.row(lo).cast<double>());
      }
      d.row(t) = (acc / kDen).cast<float>();
    }
    return d;
  };

  FloatRowMat d1 = delta_of(m.data);
  FloatRowMat d2 = delta_of(d1);

  FeatureMatrix out;
  out.utterance_id = m.utterance_id;
  out.config_hash = m.config_hash;
  out.data.resize(T, 3 * D);
  out.data.leftCols(D) = m.data;
  out.data.middleCols(D, D) = d1;
  out.data.rightCols(D) = d2;
  return out;
}

void apply_cmn(FeatureMatrix& m) {
  if (m.n_frames() == 0)
    raise(ErrorCode::kTooFewFrames, "apply_cmn on empty matrix");
  const Eigen::RowVectorXf mean = m.data.colwise().mean();
  m.data.rowwise() -= mean;
}

std::filesystem::path feature_cache_path(
    const std::filesystem::path& cache_dir, const std::string& utterance_id,
    const std::string& config_hash) {
  return cache_dir / (utterance_id + "." + config_hash);
}

namespace {
constexpr char kFeatureMagic[] = "LFEF";
constexpr std::uint16_t kFeatureVersion = 1;
}  // namespace

void write_features(const std::filesystem::path& path,
                    const FeatureMatrix& m) {
  std::ostringstream body;
  BinaryWriter w(body);
  w.magic(kFeatureMagic);
  w.u16(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(m.n_frames()));
  w.u32(static_cast<std::uint32_t>(m.dim()));
  w.f32_array(std::span<const float>(m.data.data(),
                                     static_cast<std::size_t>(m.data.size())));
  atomic_write_file(path, body.str());
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kMissingFile, "cannot open ", path.string());
  BinaryReader r(in, path.string());
  r.expect_magic(kFeatureMagic);
  const auto version = r.u16();
  if (version != kFeatureVersion)
    raise(ErrorCode::kIoError, path.string(), ": unsupported version ",
          version);
  const auto n_frames = r.u32();
  const auto dim = r.u32();
  FeatureMatrix m;
  m.data.resize(n_frames, dim);
  r.f32_array(std::span<float>(m.data.data(),
                               static_cast<std::size_t>(m.data.size())));
  return m;
}

FeatureMatrix extract_features(
    const UtteranceRecord& rec, const FeatureConfig& cfg,
    const std::optional<std::filesystem::path>& cache_dir) {
  const std::string hash = cfg.config_hash();
  if (cache_dir) {
    const auto path = feature_cache_path(*cache_dir, rec.utterance_id, hash);
    if (std::filesystem::exists(path)) {
      FeatureMatrix m = read_features(path);
      m.utterance_id = rec.utterance_id;
      m.config_hash = hash;
      if (m.dim() != cfg.feature_dim())
        raise(ErrorCode::kConfigMismatch, "cached features for ",
              rec.utterance_id, " have dim ", m.dim(), ", config expects ",
              cfg.feature_dim());
      return m;
    }
  }

  WavData wav;
  try {
    wav = read_wav(rec.audio_path);
  } catch (const LfeError& e) {
    raise(e.code(), "utterance ", rec.utterance_id, ": ", e.what());
  }
  if (wav.sample_rate_hz != cfg.sample_rate_hz)
    raise(ErrorCode::kRateMismatch, "utterance ", rec.utterance_id, ": wav is ",
          wav.sample_rate_hz, " Hz, config expects ", cfg.sample_rate_hz);
  if (wav.samples.empty())
    raise(ErrorCode::kEmptyAudio, "utterance ", rec.utterance_id,
          ": no samples");

  FeatureMatrix m;
  try {
    m = compute_mfcc(wav.samples, cfg);
    if (cfg.cmn) apply_cmn(m);
    if (cfg.add_deltas) m = append_deltas(m);
    if (cfg.add_pitch) {
      const FloatRowMat pitch = compute_pitch(wav.samples, cfg);
      if (pitch.rows() != m.data.rows())
        raise(ErrorCode::kNumericalFailure, "pitch/cepstra frame mismatch");
      FloatRowMat joined(m.n_frames(), m.dim() + pitch.cols());
      joined.leftCols(m.dim()) = m.data;
      joined.rightCols(pitch.cols()) = pitch;
      m.data = std::move(joined);
    }
  } catch (const LfeError& e) {
    raise(e.code(), "utterance ", rec.utterance_id, ": ", e.what());
  }
  m.utterance_id = rec.utterance_id;
  m.config_hash = hash;

  if (cache_dir) {
    std::filesystem::create_directories(*cache_dir);
    write_features(feature_cache_path(*cache_dir, rec.utterance_id, hash), m);
  }
  return m;
}

}  // namespace lfe
