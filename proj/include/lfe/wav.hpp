// include/lfe/wav.hpp

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

#ifndef LFE_WAV_HPP_
#define LFE_WAV_HPP_

#include <filesystem>
#include <vector>

namespace lfe {

// 16-bit signed PCM mono RIFF/WAV only.  Samples are scaled to [-1, 1).
struct WavData {
  int sample_rate_hz = 0;
  std::vector<float> samples;
  double duration_s() const {
    return sample_rate_hz > 0
               ? static_cast<double>(samples.size()) / sample_rate_hz
               : 0.0;
  }
};

WavData read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path,
               const std::vector<float>& samples, int sample_rate_hz);

}  // namespace lfe

#endif  // LFE_WAV_HPP_
