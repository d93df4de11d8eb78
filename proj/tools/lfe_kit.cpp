// tools/lfe_kit.cpp

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

// Command-line front end.  Every stage of the experiment is independently
// invocable against the same config and cache, and `run` does the whole
// thing: features, per-language models, cross-condition ABX, familiarity
// statistics, report files.

#include <cstdint>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lfe/pipeline.hpp"
#include "lfe/report.hpp"
#include "lfe/synth.hpp"

namespace {

int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

const lfe::LanguageConfig& find_language(const lfe::ExperimentConfig& cfg,
                                         const std::string& name) {
  for (const auto& lang : cfg.languages)
    if (lang.name == name) return lang;
  lfe::raise(lfe::ErrorCode::kInvalidSpec, "language \"", name,
             "\" is not in the config");
}

// Languages to operate on: the whole config unless names were given.
std::vector<const lfe::LanguageConfig*> select_languages(
    const lfe::ExperimentConfig& cfg, const std::vector<std::string>& names) {
  std::vector<const lfe::LanguageConfig*> out;
  if (names.empty()) {
    for (const auto& lang : cfg.languages) out.push_back(&lang);
  } else {
    for (const auto& name : names) out.push_back(&find_language(cfg, name));
  }
  return out;
}

std::set<std::string> format_set(const std::vector<std::string>& formats) {
  return {formats.begin(), formats.end()};
}

void print_summary(const lfe::LfeReport& report) {
  for (const auto& pr : report.pairs) {
    std::cout << pr.language_a << "/" << pr.language_b
              << ": s_same=" << pr.score.s_same
              << " s_diff=" << pr.score.s_diff
              << " lfe=" << pr.score.lfe_percent
              << "% p=" << pr.score.p_value;
    if (!pr.score.stars.empty()) std::cout << " " << pr.score.stars;
    std::cout << "\n";
  }
  std::cout << "mean LFE " << report.mean_lfe << "% ("
            << report.mean_ci.level * 100 << "% CI [" << report.mean_ci.lo
            << ", " << report.mean_ci.hi << "])\n"
            << "ABX error familiar " << report.familiar_mean_abx
            << " vs unfamiliar " << report.unfamiliar_mean_abx
            << ", pooled permutation p=" << report.overall_p << "\n";
  if (report.family) {
    std::cout << "family contrast: same M=" << report.family->same_mean
              << "% (N=" << report.family->same_n
              << "), different M=" << report.family->diff_mean
              << "% (N=" << report.family->diff_n << ")\n";
  } else if (!report.family_notice.empty()) {
    std::cout << report.family_notice << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-familiarity-effect toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  int threads = default_threads();
  std::vector<std::string> language_names;
  std::string test_name, train_name;
  std::vector<std::string> formats = {"csv", "markdown", "svg"};

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--threads", threads, "worker threads");
  };
  auto add_language_filter = [&](CLI::App* sub) {
    sub->add_option("--language", language_names,
                    "restrict to these languages (default: all)");
  };
  auto add_condition = [&](CLI::App* sub) {
    sub->add_option("--test", test_name, "test-set language")->required();
    sub->add_option("--train", train_name, "model (training) language")
        ->required();
  };

  auto* c_features = app.add_subcommand(
      "features", "extract and cache features for the manifests");
  add_common(c_features);
  add_language_filter(c_features);
  c_features->callback([&] {
    const auto cfg = lfe::load_experiment_config(config_path);
    for (const auto* lang : select_languages(cfg, language_names)) {
      const auto digests = lfe::prepare_features(cfg, *lang, threads);
      std::cout << "features " << lang->name << ": train " << digests.train
                << " test " << digests.test << "\n";
    }
  });

  auto* c_ubm =
      app.add_subcommand("train-ubm", "train (or load) per-language GMMs");
  add_common(c_ubm);
  add_language_filter(c_ubm);
  c_ubm->callback([&] {
    const auto cfg = lfe::load_experiment_config(config_path);
    for (const auto* lang : select_languages(cfg, language_names)) {
      const auto gmm = lfe::language_ubm(cfg, *lang, threads);
      std::cout << "ubm " << lang->name << ": " << gmm.n_components()
                << " components, dim " << gmm.dim();
      if (!gmm.train_log.empty())
        std::cout << ", final log-likelihood " << gmm.train_log.back();
      std::cout << "\n";
    }
  });

  auto* c_tv = app.add_subcommand(
      "train-tv", "train (or load) per-language total-variability models");
  add_common(c_tv);
  add_language_filter(c_tv);
  c_tv->callback([&] {
    const auto cfg = lfe::load_experiment_config(config_path);
    for (const auto* lang : select_languages(cfg, language_names)) {
      const auto model = lfe::language_tv(cfg, *lang, threads);
      std::cout << "tv " << lang->name << ": rank " << model.rank()
                << ", supervector " << model.t.rows() << "\n";
    }
  });

  auto* c_extract = app.add_subcommand(
      "extract", "extract i-vectors for one test/train condition");
  add_common(c_extract);
  add_condition(c_extract);
  c_extract->callback([&] {
    const auto cfg = lfe::load_experiment_config(config_path);
    const auto ivs = lfe::condition_ivectors(cfg, find_language(cfg, test_name),
                                             find_language(cfg, train_name),
                                             threads);
    std::cout << "ivectors test=" << test_name << " train=" << train_name
              << ": " << ivs.records.size() << " utterances, rank "
              << ivs.rank << "\n";
  });

  auto* c_abx = app.add_subcommand(
      "abx", "ABX speaker discrimination for one test/train condition");
  add_common(c_abx);
  add_condition(c_abx);
  c_abx->callback([&] {
    const auto cfg = lfe::load_experiment_config(config_path);
    const auto result = lfe::condition_abx(cfg, find_language(cfg, test_name),
                                           find_language(cfg, train_name),
                                           threads);
    std::cout << "abx test=" << test_name << " train=" << train_name
              << ": error " << result.error_rate() << " over "
              << result.n_triplets() << " triplets ("
              << (result.sampled ? "sampled" : "exhaustive") << ")\n";
  });

  auto* c_lfe = app.add_subcommand(
      "lfe", "familiarity scores and statistics for every pair (no files)");
  add_common(c_lfe);
  c_lfe->callback([&] {
    const auto cfg = lfe::load_experiment_config(config_path);
    print_summary(lfe::run_pipeline(cfg, threads));
  });

  auto* c_report = app.add_subcommand(
      "report", "write report files (cached stages are not recomputed)");
  add_common(c_report);
  c_report
      ->add_option("--formats", formats, "subset of csv, markdown, svg")
      ->delimiter(',');
  c_report->callback([&] {
    const auto cfg = lfe::load_experiment_config(config_path);
    const auto report = lfe::run_pipeline(cfg, threads);
    std::cout << lfe::emit_report(report, format_set(formats), cfg.output_dir);
  });

  auto* c_run =
      app.add_subcommand("run", "full pipeline: stages, statistics, report");
  add_common(c_run);
  c_run->add_option("--formats", formats, "subset of csv, markdown, svg")
      ->delimiter(',');
  c_run->callback([&] {
    const auto cfg = lfe::load_experiment_config(config_path);
    const auto report = lfe::run_pipeline(cfg, threads);
    std::cout << lfe::emit_report(report, format_set(formats), cfg.output_dir);
    print_summary(report);
  });

  lfe::SynthConfig synth;
  auto* c_synth = app.add_subcommand(
      "synth", "generate a synthetic experiment (feature cache + config)");
  std::uint64_t synth_max_triplets = 2000000;
  c_synth->add_option("--out", synth.root, "experiment root directory")
      ->required();
  c_synth->add_option("--languages", synth.n_languages,
                      "synthetic languages (2..6)");
  c_synth->add_option("--separation", synth.separation,
                      "generator separation, 0 (identical) .. 1 (independent)");
  c_synth->add_flag("--accent", synth.accented,
                    "add a language interpolating the first two generators");
  c_synth->add_option("--seed", synth.seed, "master seed");
  c_synth->add_option("--dim", synth.dim, "feature dimension");
  c_synth->add_option("--generator-components", synth.n_generator_components,
                      "mixture components per language generator");
  c_synth->add_option("--speaker-dim", synth.speaker_dim,
                      "speaker latent dimension");
  c_synth->add_option("--layout-scale", synth.layout_scale,
                      "spread of component means");
  c_synth->add_option("--speaker-scale", synth.speaker_scale,
                      "per-speaker offset scale");
  c_synth->add_option("--utterance-scale", synth.utterance_scale,
                      "per-utterance drift scale");
  c_synth->add_option("--noise-scale", synth.noise_scale,
                      "per-frame noise scale");
  c_synth->add_option("--train-speakers", synth.n_train_speakers,
                      "training speakers per language");
  c_synth->add_option("--test-speakers", synth.n_test_speakers,
                      "test speakers per language");
  c_synth->add_option("--train-utterances", synth.n_train_utterances,
                      "training utterances per speaker");
  c_synth->add_option("--test-utterances", synth.n_test_utterances,
                      "test utterances per speaker");
  c_synth->add_option("--train-frames", synth.train_frames,
                      "frames per training utterance");
  c_synth->add_option("--test-frames", synth.test_frames,
                      "frames per test utterance");
  c_synth->add_option("--ubm-components", synth.ubm_components,
                      "GMM components for the pipeline");
  c_synth->add_option("--ubm-iterations", synth.ubm_iterations,
                      "GMM EM iterations");
  c_synth->add_option("--tv-rank", synth.tv_rank, "i-vector rank");
  c_synth->add_option("--tv-iterations", synth.tv_iterations,
                      "total-variability EM iterations");
  c_synth->add_option("--resamples", synth.n_resamples,
                      "permutation/bootstrap resamples");
  c_synth->add_option("--max-triplets", synth_max_triplets,
                      "ABX sampling cap per condition, 0 for exhaustive");
  c_synth->callback([&] {
    if (synth_max_triplets == 0)
      synth.max_triplets.reset();
    else
      synth.max_triplets = synth_max_triplets;
    const auto cfg = lfe::synth_experiment(synth);
    std::cout << "wrote " << (synth.root / "config.json").string() << " ("
              << cfg.languages.size() << " languages)\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
