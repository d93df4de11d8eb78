// include/lfe/corpus.hpp

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

#ifndef LFE_CORPUS_HPP_
#define LFE_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lfe {

// One audio segment.  Manifests are newline-delimited JSON objects carrying
// exactly these fields; datasets are exchanged as manifests, never as audio
// downloads.
struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::string language;  // ISO-639 code
  std::string accent;    // "native" or the accenting language's code
  std::string family;    // WALS family label, may be empty
  std::string audio_path;
  double duration_s = 0.0;
};

// Parameters for carving a test split out of a manifest.
struct SplitSpec {
  double target_total_duration_s = 0.0;
  int n_speakers = 0;
  bool per_speaker_balance = true;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<UtteranceRecord> train;
  std::vector<UtteranceRecord> test;
};

std::vector<UtteranceRecord> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path,
                   const std::vector<UtteranceRecord>& records);

// Selects spec.n_speakers test speakers (seeded) and balances their
// utterances around target_total_duration_s / n_speakers; everything from the
// remaining speakers becomes the train side.  Train and test speaker sets are
// always disjoint.  Pure function of (records, spec).
Split make_split(const std::vector<UtteranceRecord>& records,
                 const SplitSpec& spec);

// Energy-based voice activity detection over non-overlapping frames.
// Returns merged (start_s, end_s) runs of frames whose mean-square energy in
// dBFS exceeds threshold_db.  Substitute for an external VAD model; off by
// default in the pipeline.
std::vector<std::pair<double, double>> energy_vad(std::span<const float> samples,
                                                  double frame_ms,
                                                  double threshold_db,
                                                  int sample_rate_hz = 16000);

}  // namespace lfe

#endif  // LFE_CORPUS_HPP_
