// include/lfe/synth.hpp

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

// Synthetic-experiment harness.  Each synthetic "language" is a Gaussian
// mixture over feature space with its own component layout; speakers are
// mean offsets shared by their utterances.  The harness writes feature cache
// entries directly, so the pipeline downstream of the audio front end runs
// unmodified on data whose ground truth is known.

#ifndef LFE_SYNTH_HPP_
#define LFE_SYNTH_HPP_

#include <cstdint>
#include <filesystem>

#include "lfe/pipeline.hpp"

namespace lfe {

struct SynthConfig {
  std::filesystem::path root;  // manifests, caches, and config.json go here

  int n_languages = 2;
  // 0 gives every language identical generator parameters (the null case);
  // 1 gives fully independent ones.  Interpolation keeps the marginal
  // spread of the draws constant.
  double separation = 1.0;
  // Adds one more language whose generator is the 50/50 interpolation of the
  // first two (an accent analogue).
  bool accented = false;

  int dim = 20;
  int n_generator_components = 16;
  // Speakers are latent vectors expressed through per-component mixing
  // matrices, so how a speaker sounds depends on the language's components;
  // recovering the speaker needs the language's structure.
  int speaker_dim = 8;
  double layout_scale = 2.0;     // spread of component means per language
  double speaker_scale = 1.0;    // per-frame scale of the speaker expression
  double utterance_scale = 0.6;  // per-utterance drift around the speaker
  double noise_scale = 1.0;      // within-component frame noise

  int n_train_speakers = 10;
  int n_test_speakers = 6;
  int n_train_utterances = 10;  // per train speaker
  int n_test_utterances = 11;   // per test speaker
  int train_frames = 800;       // per utterance
  int test_frames = 600;

  std::uint64_t seed = 0;

  // Pipeline parameters copied into the emitted config.
  int ubm_components = 16;
  int ubm_iterations = 20;
  int tv_rank = 10;
  int tv_iterations = 5;
  int n_resamples = 10000;
  std::optional<std::uint64_t> max_triplets = 2000000;
};

// Writes manifests, LFEF feature caches, and config.json under cfg.root and
// returns the ready-to-run experiment config.  Pure function of cfg: the
// same settings produce byte-identical files.
ExperimentConfig synth_experiment(const SynthConfig& cfg);

}  // namespace lfe

#endif  // LFE_SYNTH_HPP_
