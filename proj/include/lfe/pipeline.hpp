// include/lfe/pipeline.hpp

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

// End-to-end experiment driver: per-language models, cross-condition ABX,
// familiarity statistics, all behind a content-addressed cache.

#ifndef LFE_PIPELINE_HPP_
#define LFE_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lfe/abx.hpp"
#include "lfe/stats.hpp"

namespace lfe {

struct LanguageConfig {
  std::string name;
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::string family;  // may stay empty; the family contrast then gets skipped
};

struct StatsConfig {
  int n_resamples = 10000;
  double alpha = 0.05;  // per-pair significance level before correction
  double level = 0.95;  // bootstrap confidence level
  std::uint64_t seed = 0;
  // When set, the cross-pair averages weight each pair by its scored triplet
  // count instead of counting every pair once.
  bool weight_by_triplets = false;
};

struct ExperimentConfig {
  std::vector<LanguageConfig> languages;
  FeatureConfig features;
  UbmConfig ubm;
  TvConfig tv;
  AbxConfig abx;
  StatsConfig stats;
  std::filesystem::path cache_dir = "cache";
  std::filesystem::path output_dir = "out";

  // Hex digest over every parameter above; recorded in provenance output.
  std::string digest() const;
};

// JSON config round-trip.  Relative paths resolve against the config file's
// directory, LFE_CACHE_DIR overrides cache_dir, and every stage seed must be
// spelled out in the file so no run depends on ambient randomness.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const std::filesystem::path& path,
                            const ExperimentConfig& cfg);

struct ConditionSummary {
  std::string test_language;
  std::string train_language;
  double error_rate = 0.0;
  std::uint64_t n_triplets = 0;
};

struct PairResult {
  std::string language_a;
  std::string language_b;
  ConditionSummary aa;  // test a, train a
  ConditionSummary bb;  // test b, train b
  ConditionSummary ab;  // test a, train b
  ConditionSummary ba;  // test b, train a
  LfeScore score;
};

struct LfeReport {
  std::vector<PairResult> pairs;  // n*(n-1)/2 rows, config language order
  double mean_lfe = 0.0;
  BootstrapCI mean_ci;             // bootstrap over languages
  double familiar_mean_abx = 0.0;  // mean over pairs of s_same
  double unfamiliar_mean_abx = 0.0;
  double overall_p = 1.0;  // paired test pooling every pair's cells
  std::optional<FamilyContrast> family;
  std::string family_notice;  // reason when the family block is absent
  std::string config_digest;
  std::string toolkit_version;
  std::string started_at;   // UTC, ISO 8601
  std::string finished_at;
  std::map<std::string, std::string> artifacts;  // stage -> cache key
};

// Per-stage entry points.  Each one reads through the cache under
// cfg.cache_dir, computing and storing missing artifacts (and their
// dependencies) on the way.  Cache keys hash the stage inputs' content plus
// the stage parameters, so a stale entry cannot be confused with a current
// one.  Failures carry the stage name, the language or pair, and the key.
struct FeatureDigests {
  std::string train;
  std::string test;
};
FeatureDigests prepare_features(const ExperimentConfig& cfg,
                                const LanguageConfig& lang, int n_threads);
DiagGmm language_ubm(const ExperimentConfig& cfg, const LanguageConfig& lang,
                     int n_threads);
TvModel language_tv(const ExperimentConfig& cfg, const LanguageConfig& lang,
                    int n_threads);
IvectorSet condition_ivectors(const ExperimentConfig& cfg,
                              const LanguageConfig& test,
                              const LanguageConfig& train, int n_threads);
AbxResult condition_abx(const ExperimentConfig& cfg,
                        const LanguageConfig& test, const LanguageConfig& train,
                        int n_threads);

// The whole experiment: models for every language, four conditions per
// unordered pair, familiarity scores with permutation tests (Bonferroni
// across pairs), the cross-pair mean with a bootstrap interval over
// languages, and the family contrast when every language carries a label.
LfeReport run_pipeline(const ExperimentConfig& cfg, int n_threads = 1);

}  // namespace lfe

#endif  // LFE_PIPELINE_HPP_
