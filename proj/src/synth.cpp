// src/synth.cpp

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

#include "lfe/synth.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace lfe {

namespace {

constexpr const char* kLanguageNames[] = {"alpha", "beta",    "gamma",
                                          "delta", "epsilon", "zeta"};
constexpr int kMaxLanguages = 6;

// Distinct seed streams; speaker and utterance streams hash their id string
// so the draw does not depend on generation order.
constexpr std::uint64_t kSharedLayoutStream = 1;
constexpr std::uint64_t kLanguageLayoutStream = 16;

Eigen::MatrixXd draw_matrix(int rows, int cols, double scale,
                            std::mt19937_64& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * normal01(rng);
  return m;
}

Eigen::VectorXd seeded_vector(const SynthConfig& cfg, const std::string& id,
                              int dim) {
  std::mt19937_64 rng(mix_seed(cfg.seed, fnv1a64(id)));
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal01(rng);
  return v;
}

void check_config(const SynthConfig& cfg) {
  if (cfg.root.empty())
    raise(ErrorCode::kInvalidSpec, "synthetic experiment needs a root path");
  if (cfg.n_languages < 2 || cfg.n_languages > kMaxLanguages)
    raise(ErrorCode::kInvalidSpec, "need 2 to ", kMaxLanguages,
          " languages, got ", cfg.n_languages);
  if (!(cfg.separation >= 0.0 && cfg.separation <= 1.0))
    raise(ErrorCode::kInvalidSpec, "separation must lie in [0,1], got ",
          cfg.separation);
  if (cfg.dim < 1 || cfg.n_generator_components < 1 || cfg.speaker_dim < 1)
    raise(ErrorCode::kInvalidSpec,
          "generator needs positive dim, components, and speaker dim");
  if (cfg.n_train_speakers < 1 || cfg.n_test_speakers < 2)
    raise(ErrorCode::kInvalidSpec,
          "need at least 1 train speaker and 2 test speakers");
  if (cfg.n_train_utterances < 1 || cfg.n_test_utterances < 2)
    raise(ErrorCode::kInvalidSpec,
          "need at least 1 train utterance and 2 test utterances per speaker");
  if (cfg.train_frames < 1 || cfg.test_frames < 1)
    raise(ErrorCode::kInvalidSpec, "utterances need at least one frame");
  const long train_utts =
      static_cast<long>(cfg.n_train_speakers) * cfg.n_train_utterances;
  if (train_utts < cfg.tv_rank)
    raise(ErrorCode::kInvalidSpec, "subspace rank ", cfg.tv_rank, " exceeds ",
          train_utts, " training utterances");
  const long train_frames_total = train_utts * cfg.train_frames;
  if (train_frames_total < 10L * cfg.ubm_components)
    raise(ErrorCode::kInvalidSpec, "mixture of ", cfg.ubm_components,
          " components needs at least ", 10L * cfg.ubm_components,
          " training frames, generator yields ", train_frames_total);
  if (cfg.tv_rank >= cfg.ubm_components * cfg.dim)
    raise(ErrorCode::kInvalidSpec, "subspace rank ", cfg.tv_rank,
          " must be below the supervector size ",
          cfg.ubm_components * cfg.dim);
}

struct Generator {
  std::string name;
  std::string family;
  Eigen::MatrixXd layout;  // components x dim
  // Per-component speaker expression: a frame from component c carries
  // mixing[c] * s where s is the speaker's latent vector.  The stack over
  // components is language-specific, so speaker identity is only readable
  // through the language's own structure.
  std::vector<Eigen::MatrixXd> mixing;  // each dim x speaker_dim
};

std::vector<Generator> build_generators(const SynthConfig& cfg) {
  const int k = cfg.n_generator_components;
  // Entry scale keeping the per-dimension variance of mixing * N(0, I) at
  // speaker_scale^2.
  const double mix_scale =
      cfg.speaker_scale / std::sqrt(static_cast<double>(cfg.speaker_dim));

  std::mt19937_64 shared_rng(mix_seed(cfg.seed, kSharedLayoutStream));
  const Eigen::MatrixXd shared =
      draw_matrix(k, cfg.dim, cfg.layout_scale, shared_rng);
  std::vector<Eigen::MatrixXd> shared_mixing;
  for (int c = 0; c < k; ++c)
    shared_mixing.push_back(
        draw_matrix(cfg.dim, cfg.speaker_dim, mix_scale, shared_rng));

  // Rotating between the shared draw and a private one keeps the marginal
  // scale independent of the separation setting.
  const double theta = cfg.separation * 1.57079632679489662;
  const double keep = std::cos(theta);
  const double move = std::sin(theta);

  std::vector<Generator> gens;
  for (int j = 0; j < cfg.n_languages; ++j) {
    std::mt19937_64 rng(mix_seed(cfg.seed, kLanguageLayoutStream + j));
    Generator g;
    g.name = kLanguageNames[j];
    g.family = strcat("fam", j / 2);
    g.layout =
        keep * shared + move * draw_matrix(k, cfg.dim, cfg.layout_scale, rng);
    for (int c = 0; c < k; ++c)
      g.mixing.push_back(
          keep * shared_mixing[c] +
          move * draw_matrix(cfg.dim, cfg.speaker_dim, mix_scale, rng));
    gens.push_back(std::move(g));
  }
  if (cfg.accented) {
    Generator g;
    g.name = "accented";
    g.family = gens[0].family;
    g.layout = 0.5 * (gens[0].layout + gens[1].layout);
    for (int c = 0; c < k; ++c)
      g.mixing.push_back(0.5 * (gens[0].mixing[c] + gens[1].mixing[c]));
    gens.push_back(std::move(g));
  }
  return gens;
}

FloatRowMat synth_utterance(const SynthConfig& cfg, const Generator& gen,
                            const Eigen::VectorXd& speaker,
                            const std::string& utterance_id, int n_frames) {
  std::mt19937_64 rng(mix_seed(cfg.seed, fnv1a64(utterance_id)));
  Eigen::VectorXd drift(cfg.dim);
  for (int i = 0; i < cfg.dim; ++i)
    drift[i] = cfg.utterance_scale * normal01(rng);

  const auto k = static_cast<std::uint64_t>(gen.layout.rows());
  FloatRowMat x(n_frames, cfg.dim);
  Eigen::VectorXd mean(cfg.dim);
  for (int t = 0; t < n_frames; ++t) {
    const auto c = static_cast<Eigen::Index>(rng() % k);
    mean = gen.layout.row(c).transpose() + gen.mixing[c] * speaker + drift;
    for (int i = 0; i < cfg.dim; ++i)
      x(t, i) = static_cast<float>(mean[i] + cfg.noise_scale * normal01(rng));
  }
  return x;
}

}  // namespace

ExperimentConfig synth_experiment(const SynthConfig& cfg) {
  check_config(cfg);
  const auto generators = build_generators(cfg);

  ExperimentConfig exp;
  exp.features.n_cepstra = cfg.dim;
  exp.features.add_deltas = false;
  exp.features.add_pitch = false;
  exp.features.cmn = false;
  exp.ubm.n_components = cfg.ubm_components;
  exp.ubm.max_iterations = cfg.ubm_iterations;
  exp.ubm.seed = mix_seed(cfg.seed, 11);
  exp.tv.rank = cfg.tv_rank;
  exp.tv.n_iterations = cfg.tv_iterations;
  exp.tv.seed = mix_seed(cfg.seed, 12);
  exp.abx.max_triplets = cfg.max_triplets;
  exp.abx.seed = mix_seed(cfg.seed, 13);
  exp.stats.n_resamples = cfg.n_resamples;
  exp.stats.seed = mix_seed(cfg.seed, 14);
  exp.cache_dir = cfg.root / "cache";
  exp.output_dir = cfg.root / "out";

  const std::string feature_hash = exp.features.config_hash();
  const auto feature_dir = exp.cache_dir / "features";
  const double frame_s = exp.features.frame_shift_ms * 1e-3;

  for (const auto& gen : generators) {
    std::vector<UtteranceRecord> train, test;
    auto emit = [&](bool is_test, int speaker, int utterance) {
      const int n_frames = is_test ? cfg.test_frames : cfg.train_frames;
      UtteranceRecord rec;
      rec.speaker_id =
          strcat(gen.name, is_test ? "_te" : "_tr", speaker < 10 ? "0" : "",
                 speaker);
      rec.utterance_id =
          strcat(rec.speaker_id, "_u", utterance < 10 ? "0" : "", utterance);
      rec.language = gen.name;
      rec.accent = gen.name == "accented" ? "alpha+beta" : "native";
      rec.family = gen.family;
      rec.audio_path = strcat("synthetic://", rec.utterance_id);
      rec.duration_s = n_frames * frame_s;

      const Eigen::VectorXd latent =
          seeded_vector(cfg, "spk:" + rec.speaker_id, cfg.speaker_dim);
      FeatureMatrix m;
      m.utterance_id = rec.utterance_id;
      m.config_hash = feature_hash;
      m.data = synth_utterance(cfg, gen, latent, "utt:" + rec.utterance_id,
                               n_frames);
      write_features(
          feature_cache_path(feature_dir, rec.utterance_id, feature_hash), m);
      (is_test ? test : train).push_back(std::move(rec));
    };
    for (int s = 0; s < cfg.n_train_speakers; ++s)
      for (int u = 0; u < cfg.n_train_utterances; ++u) emit(false, s, u);
    for (int s = 0; s < cfg.n_test_speakers; ++s)
      for (int u = 0; u < cfg.n_test_utterances; ++u) emit(true, s, u);

    LanguageConfig lang;
    lang.name = gen.name;
    lang.family = gen.family;
    lang.train_manifest = cfg.root / "manifests" / (gen.name + "_train.jsonl");
    lang.test_manifest = cfg.root / "manifests" / (gen.name + "_test.jsonl");
    save_manifest(lang.train_manifest, train);
    save_manifest(lang.test_manifest, test);
    exp.languages.push_back(std::move(lang));
  }

  save_experiment_config(cfg.root / "config.json", exp);
  return exp;
}

}  // namespace lfe
