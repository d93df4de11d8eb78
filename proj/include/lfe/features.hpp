// include/lfe/features.hpp

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

#ifndef LFE_FEATURES_HPP_
#define LFE_FEATURES_HPP_

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfe/corpus.hpp"

namespace lfe {

using FloatRowMat =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Front-end parameters.  The defaults produce 13 cepstra (c0 replaced by log
// frame energy), their first and second derivatives, and 3 pitch features:
// 13*3 + 3 = 42 dimensions.
struct FeatureConfig {
  int sample_rate_hz = 16000;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int n_mel_filters = 23;
  int n_cepstra = 13;
  double preemphasis = 0.97;
  bool add_deltas = true;  // both delta and delta-delta, window +-2
  bool add_pitch = true;   // voicing score, log-F0, delta log-F0
  bool cmn = true;         // per-utterance cepstral mean subtraction

  int frame_length() const {
    return static_cast<int>(frame_length_ms * 1e-3 * sample_rate_hz);
  }
  int frame_shift() const {
    return static_cast<int>(frame_shift_ms * 1e-3 * sample_rate_hz);
  }
  int feature_dim() const {
    return n_cepstra * (add_deltas ? 3 : 1) + (add_pitch ? 3 : 0);
  }
  // Digest used in cache filenames: <utterance_id>.<config_hash>
  std::string config_hash() const;
};

// Log floor applied to energies and filterbank outputs so silence stays finite.
inline constexpr double kLogFloor = 1e-10;

struct FeatureMatrix {
  std::string utterance_id;
  std::string config_hash;
  FloatRowMat data;  // frames x dim

  int n_frames() const { return static_cast<int>(data.rows()); }
  int dim() const { return static_cast<int>(data.cols()); }
};

// 13 MFCCs per frame: pre-emphasis, Hamming window, power spectrum, mel
// filterbank, log, DCT-II; coefficient 0 is replaced by the log frame energy
// measured before windowing.
FeatureMatrix compute_mfcc(std::span<const float> samples,
                           const FeatureConfig& cfg);

// Appends delta and delta-delta columns (regression formula over a +-2
// window with edge replication); the dimension triples.
FeatureMatrix append_deltas(const FeatureMatrix& m);

// Pitch features per analysis frame, aligned with compute_mfcc framing:
// voicing score, log-F0 (interpolated through unvoiced stretches), and
// delta log-F0.
FloatRowMat compute_pitch(std::span<const float> samples,
                          const FeatureConfig& cfg);

// Subtracts the per-utterance mean of every column in place.
void apply_cmn(FeatureMatrix& m);

// Full front end for one utterance: MFCC (+CMN) (+deltas) (+pitch columns),
// cached under cache_dir when given.
FeatureMatrix extract_features(const UtteranceRecord& rec,
                               const FeatureConfig& cfg,
                               const std::optional<std::filesystem::path>&
                                   cache_dir = std::nullopt);

// Feature cache entries: magic "LFEF", version u16, n_frames u32, dim u32,
// then n_frames*dim little-endian float32.
void write_features(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_features(const std::filesystem::path& path);
std::filesystem::path feature_cache_path(const std::filesystem::path& cache_dir,
                                         const std::string& utterance_id,
                                         const std::string& config_hash);

// Pieces of the MFCC pipeline, exposed for direct checking.
namespace dsp {

// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& buf, bool inverse = false);

std::size_t next_pow2(std::size_t n);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular mel filters over FFT bins [0, n_fft/2].
struct MelFilterbank {
  int n_fft = 0;
  std::vector<std::vector<std::pair<int, double>>> filters;  // (bin, weight)
  std::vector<double> center_hz;

  Eigen::VectorXd apply(const Eigen::VectorXd& power_spectrum) const;
};

MelFilterbank make_mel_filterbank(int n_filters, int n_fft, int sample_rate_hz,
                                  double low_hz = 20.0, double high_hz = 0.0);

// Orthonormal DCT-II matrix (n_out x n_in).
Eigen::MatrixXd dct_matrix(int n_out, int n_in);

}  // namespace dsp

}  // namespace lfe

#endif  // LFE_FEATURES_HPP_
