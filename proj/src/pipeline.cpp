// src/pipeline.cpp

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

#include "lfe/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <chrono>
#include <set>
#include <utility>

#include <json.hpp>

#include "lfe/io.hpp"
#include "lfe/parallel.hpp"

namespace lfe {

namespace {

using nlohmann::ordered_json;

// Shortest round-trippable decimal form, used in cache keys and digests so
// distinct parameter values can never collide.
std::string canon(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string iso_utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Re-raises a stage failure with the stage name, the language or pair it hit,
// and the cache key involved.
template <typename F>
auto guarded(const char* stage, const std::string& scope,
             const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const LfeError& e) {
    std::string_view what = e.what();
    const std::string_view name = error_name(e.code());
    if (what.substr(0, name.size()) == name &&
        what.substr(name.size(), 2) == ": ")
      what.remove_prefix(name.size() + 2);
    std::string context = strcat("stage ", stage, " (", scope);
    if (!key.empty()) context += strcat(", key ", key);
    raise(e.code(), context, "): ", what);
  }
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.languages.size() < 2)
    raise(ErrorCode::kInvalidSpec, "need at least 2 languages, have ",
          cfg.languages.size());
  std::set<std::string> names;
  for (const auto& lang : cfg.languages) {
    if (lang.name.empty())
      raise(ErrorCode::kInvalidSpec, "language with an empty name");
    if (!names.insert(lang.name).second)
      raise(ErrorCode::kInvalidSpec, "duplicate language name ", lang.name);
  }
  if (cfg.ubm.n_components < 1 || cfg.ubm.max_iterations < 1)
    raise(ErrorCode::kInvalidSpec, "mixture needs components and iterations");
  if (cfg.tv.rank < 1 || cfg.tv.n_iterations < 1)
    raise(ErrorCode::kInvalidSpec, "subspace needs rank and iterations");
  if (cfg.stats.n_resamples < 1)
    raise(ErrorCode::kInvalidSpec, "n_resamples must be positive");
  if (!(cfg.stats.alpha > 0.0 && cfg.stats.alpha < 1.0))
    raise(ErrorCode::kInvalidSpec, "alpha out of (0,1): ", cfg.stats.alpha);
  if (!(cfg.stats.level > 0.0 && cfg.stats.level < 1.0))
    raise(ErrorCode::kInvalidSpec, "level out of (0,1): ", cfg.stats.level);
  if (cfg.cache_dir.empty() || cfg.output_dir.empty())
    raise(ErrorCode::kInvalidSpec, "cache_dir and output_dir must be set");
}

// Features for every utterance of one manifest, extracted (or loaded) through
// the cache; the digest covers utterance ids and cache file contents in
// manifest order.
std::string digest_manifest(const ExperimentConfig& cfg,
                            const std::filesystem::path& manifest,
                            int n_threads) {
  const auto records = load_manifest(manifest);
  if (records.empty())
    raise(ErrorCode::kInsufficientData, "manifest ", manifest.string(),
          " is empty");
  const auto feature_dir = cfg.cache_dir / "features";
  const std::string feature_hash = cfg.features.config_hash();
  std::vector<std::uint64_t> hashes(records.size());
  parallel_items(records.size(), n_threads, [&](std::size_t i) {
    extract_features(records[i], cfg.features, feature_dir);
    hashes[i] = hash_file(
        feature_cache_path(feature_dir, records[i].utterance_id, feature_hash));
  });
  std::uint64_t h = fnv1a64("features:");
  for (std::size_t i = 0; i < records.size(); ++i) {
    h = fnv1a64(records[i].utterance_id, h);
    h = fnv1a64(to_hex16(hashes[i]), h);
  }
  return to_hex16(h);
}

std::string ubm_key_of(const ExperimentConfig& cfg, const LanguageConfig& lang,
                       const std::string& train_digest) {
  return to_hex16(fnv1a64(strcat(
      "ubm;lang=", lang.name, ";feat=", cfg.features.config_hash(),
      ";data=", train_digest, ";k=", cfg.ubm.n_components,
      ";iters=", cfg.ubm.max_iterations,
      ";tol=", canon(cfg.ubm.convergence_tol), ";seed=", cfg.ubm.seed)));
}

std::string tv_key_of(const ExperimentConfig& cfg, const std::string& ubm_key) {
  return to_hex16(fnv1a64(strcat("tv;ubm=", ubm_key, ";rank=", cfg.tv.rank,
                                 ";iters=", cfg.tv.n_iterations,
                                 ";seed=", cfg.tv.seed)));
}

std::string ivec_key_of(const std::string& tv_key,
                        const std::string& test_name,
                        const std::string& test_digest) {
  return to_hex16(fnv1a64(strcat("ivec;tv=", tv_key, ";test=", test_name,
                                 ";data=", test_digest)));
}

std::string abx_key_of(const ExperimentConfig& cfg,
                       const std::string& ivec_key) {
  return to_hex16(fnv1a64(strcat(
      "abx;ivec=", ivec_key, ";cap=",
      cfg.abx.max_triplets ? strcat(*cfg.abx.max_triplets) : "none",
      ";seed=", cfg.abx.seed)));
}

std::vector<FeatureMatrix> load_manifest_features(
    const ExperimentConfig& cfg, const std::filesystem::path& manifest,
    int n_threads) {
  const auto records = load_manifest(manifest);
  const auto feature_dir = cfg.cache_dir / "features";
  std::vector<FeatureMatrix> feats(records.size());
  parallel_items(records.size(), n_threads, [&](std::size_t i) {
    feats[i] = extract_features(records[i], cfg.features, feature_dir);
  });
  return feats;
}

std::vector<BaumWelchStats> manifest_stats(const ExperimentConfig& cfg,
                                           const DiagGmm& ubm,
                                           const std::filesystem::path& manifest,
                                           int n_threads) {
  const auto records = load_manifest(manifest);
  const auto feature_dir = cfg.cache_dir / "features";
  std::vector<BaumWelchStats> stats(records.size());
  parallel_items(records.size(), n_threads, [&](std::size_t i) {
    const FeatureMatrix feats =
        extract_features(records[i], cfg.features, feature_dir);
    stats[i] = accumulate_stats(ubm, feats, records[i].speaker_id);
  });
  return stats;
}

}  // namespace

FeatureDigests prepare_features(const ExperimentConfig& cfg,
                                const LanguageConfig& lang, int n_threads) {
  return guarded("features", strcat("language ", lang.name), "", [&] {
    FeatureDigests d;
    d.train = digest_manifest(cfg, lang.train_manifest, n_threads);
    d.test = digest_manifest(cfg, lang.test_manifest, n_threads);
    return d;
  });
}

DiagGmm language_ubm(const ExperimentConfig& cfg, const LanguageConfig& lang,
                     int n_threads) {
  const FeatureDigests digests = prepare_features(cfg, lang, n_threads);
  const std::string key = ubm_key_of(cfg, lang, digests.train);
  const auto path = cfg.cache_dir / "ubm" / (key + ".lfeg");
  return guarded("train-ubm", strcat("language ", lang.name), key, [&] {
    if (std::filesystem::exists(path)) return read_gmm(path);
    const auto feats =
        load_manifest_features(cfg, lang.train_manifest, n_threads);
    Eigen::Index rows = 0;
    for (const auto& f : feats) rows += f.data.rows();
    FloatRowMat all(rows, feats.front().data.cols());
    Eigen::Index at = 0;
    for (const auto& f : feats) {
      all.middleRows(at, f.data.rows()) = f.data;
      at += f.data.rows();
    }
    UbmConfig uc = cfg.ubm;
    uc.n_threads = n_threads;
    DiagGmm g = train_ubm(all, uc);
    write_gmm(path, g);
    return g;
  });
}

TvModel language_tv(const ExperimentConfig& cfg, const LanguageConfig& lang,
                    int n_threads) {
  const FeatureDigests digests = prepare_features(cfg, lang, n_threads);
  const std::string key =
      tv_key_of(cfg, ubm_key_of(cfg, lang, digests.train));
  const auto path = cfg.cache_dir / "tv" / (key + ".lfet");
  if (std::filesystem::exists(path))
    return guarded("train-tv", strcat("language ", lang.name), key,
                   [&] { return read_tv(path); });
  const DiagGmm ubm = language_ubm(cfg, lang, n_threads);
  return guarded("train-tv", strcat("language ", lang.name), key, [&] {
    const auto stats =
        manifest_stats(cfg, ubm, lang.train_manifest, n_threads);
    TvConfig tc = cfg.tv;
    tc.n_threads = n_threads;
    TvModel model = train_tv(ubm, stats, tc);
    write_tv(path, model);
    return model;
  });
}

IvectorSet condition_ivectors(const ExperimentConfig& cfg,
                              const LanguageConfig& test,
                              const LanguageConfig& train, int n_threads) {
  const std::string scope =
      strcat("test ", test.name, " under train ", train.name);
  const FeatureDigests train_digests = prepare_features(cfg, train, n_threads);
  const FeatureDigests test_digests =
      test.name == train.name ? train_digests
                              : prepare_features(cfg, test, n_threads);
  const std::string tv_key =
      tv_key_of(cfg, ubm_key_of(cfg, train, train_digests.train));
  const std::string key =
      ivec_key_of(tv_key, test.name, test_digests.test);
  const auto path = cfg.cache_dir / "ivectors" / (key + ".lfei");
  if (std::filesystem::exists(path))
    return guarded("extract", scope, key, [&] { return read_ivectors(path); });
  const TvModel model = language_tv(cfg, train, n_threads);
  return guarded("extract", scope, key, [&] {
    const auto stats =
        manifest_stats(cfg, model.ubm, test.test_manifest, n_threads);
    IvectorSet set =
        extract_ivectors(model, stats, test.name, train.name, n_threads);
    write_ivectors(path, set);
    return set;
  });
}

AbxResult condition_abx(const ExperimentConfig& cfg, const LanguageConfig& test,
                        const LanguageConfig& train, int n_threads) {
  const std::string scope =
      strcat("test ", test.name, " under train ", train.name);
  const FeatureDigests train_digests = prepare_features(cfg, train, n_threads);
  const FeatureDigests test_digests =
      test.name == train.name ? train_digests
                              : prepare_features(cfg, test, n_threads);
  const std::string tv_key =
      tv_key_of(cfg, ubm_key_of(cfg, train, train_digests.train));
  const std::string key = abx_key_of(
      cfg, ivec_key_of(tv_key, test.name, test_digests.test));
  const auto path = cfg.cache_dir / "abx" / (key + ".json");
  if (std::filesystem::exists(path))
    return guarded("abx", scope, key, [&] { return read_abx(path); });
  const IvectorSet ivs = condition_ivectors(cfg, test, train, n_threads);
  return guarded("abx", scope, key, [&] {
    AbxConfig ac = cfg.abx;
    ac.n_threads = n_threads;
    AbxResult result = abx_error(ivs, ac);
    write_abx(path, result);
    return result;
  });
}

namespace {

ConditionSummary summarize(const AbxResult& r) {
  ConditionSummary s;
  s.test_language = r.test_language;
  s.train_language = r.train_language;
  s.error_rate = r.error_rate();
  s.n_triplets = r.n_triplets();
  return s;
}

// Error rates of the scored cells of one test language under both training
// conditions, aligned cell by cell for the paired test.
void paired_cell_rates(const AbxResult& matched, const AbxResult& mismatched,
                       std::vector<double>& familiar,
                       std::vector<double>& unfamiliar) {
  if (matched.cells.size() != mismatched.cells.size())
    raise(ErrorCode::kLengthMismatch, "conditions disagree on cell count: ",
          matched.cells.size(), " vs ", mismatched.cells.size());
  for (std::size_t i = 0; i < matched.cells.size(); ++i) {
    const AbxCell& m = matched.cells[i];
    const AbxCell& x = mismatched.cells[i];
    if (m.speaker_a != x.speaker_a || m.speaker_b != x.speaker_b ||
        m.n_scored != x.n_scored)
      raise(ErrorCode::kLengthMismatch,
            "conditions disagree on cell ", i, ": ", m.speaker_a, "/",
            m.speaker_b, " vs ", x.speaker_a, "/", x.speaker_b);
    if (m.n_scored == 0) continue;
    familiar.push_back(m.error_rate());
    unfamiliar.push_back(x.error_rate());
  }
}

}  // namespace

LfeReport run_pipeline(const ExperimentConfig& cfg, int n_threads) {
  validate_config(cfg);

  LfeReport report;
  report.toolkit_version = kVersion;
  report.config_digest = cfg.digest();
  report.started_at = iso_utc_now();

  // Models for every language first, then the cross conditions.
  for (const auto& lang : cfg.languages) {
    const FeatureDigests digests = prepare_features(cfg, lang, n_threads);
    const std::string ubm_key = ubm_key_of(cfg, lang, digests.train);
    report.artifacts[strcat("manifest:", lang.name, ":train")] =
        to_hex16(hash_file(lang.train_manifest));
    report.artifacts[strcat("manifest:", lang.name, ":test")] =
        to_hex16(hash_file(lang.test_manifest));
    report.artifacts[strcat("features:", lang.name, ":train")] = digests.train;
    report.artifacts[strcat("features:", lang.name, ":test")] = digests.test;
    report.artifacts[strcat("ubm:", lang.name)] = ubm_key;
    report.artifacts[strcat("tv:", lang.name)] = tv_key_of(cfg, ubm_key);
    language_tv(cfg, lang, n_threads);
  }

  struct PairCells {
    std::vector<double> familiar;
    std::vector<double> unfamiliar;
  };
  std::vector<PairCells> cells;
  std::vector<double> p_values;

  const std::size_t n_langs = cfg.languages.size();
  std::size_t pair_index = 0;
  for (std::size_t i = 0; i < n_langs; ++i) {
    for (std::size_t j = i + 1; j < n_langs; ++j, ++pair_index) {
      const LanguageConfig& a = cfg.languages[i];
      const LanguageConfig& b = cfg.languages[j];
      const AbxResult aa = condition_abx(cfg, a, a, n_threads);
      const AbxResult bb = condition_abx(cfg, b, b, n_threads);
      const AbxResult ab = condition_abx(cfg, a, b, n_threads);
      const AbxResult ba = condition_abx(cfg, b, a, n_threads);

      const std::string scope = strcat("pair ", a.name, "/", b.name);
      PairResult pr;
      pr.language_a = a.name;
      pr.language_b = b.name;
      pr.aa = summarize(aa);
      pr.bb = summarize(bb);
      pr.ab = summarize(ab);
      pr.ba = summarize(ba);

      PairCells pc;
      guarded("lfe", scope, "", [&] {
        paired_cell_rates(aa, ab, pc.familiar, pc.unfamiliar);
        paired_cell_rates(bb, ba, pc.familiar, pc.unfamiliar);
        pr.score = lfe_score(pr.aa.error_rate, pr.bb.error_rate,
                             pr.ab.error_rate, pr.ba.error_rate);
        pr.score.language_a = a.name;
        pr.score.language_b = b.name;
        pr.score.p_value = fisher_pitman(
            pc.unfamiliar, pc.familiar, true, cfg.stats.n_resamples,
            mix_seed(cfg.stats.seed, pair_index), n_threads).p_value;
      });
      p_values.push_back(pr.score.p_value);
      cells.push_back(std::move(pc));
      report.pairs.push_back(std::move(pr));
    }
  }

  const std::size_t n_pairs = report.pairs.size();
  const std::vector<bool> significant = bonferroni(p_values, cfg.stats.alpha);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    report.pairs[p].score.significant = significant[p];
    report.pairs[p].score.stars =
        significance_stars(report.pairs[p].score.p_value, n_pairs);
  }

  // Cross-pair averages: each pair counts once unless triplet weighting is
  // requested.
  double w_total = 0.0, lfe_sum = 0.0, fam_sum = 0.0, unfam_sum = 0.0;
  for (const auto& pr : report.pairs) {
    const double w =
        cfg.stats.weight_by_triplets
            ? static_cast<double>(pr.aa.n_triplets + pr.bb.n_triplets +
                                  pr.ab.n_triplets + pr.ba.n_triplets)
            : 1.0;
    w_total += w;
    lfe_sum += w * pr.score.lfe_percent;
    fam_sum += w * pr.score.s_same;
    unfam_sum += w * pr.score.s_diff;
  }
  report.mean_lfe = lfe_sum / w_total;
  report.familiar_mean_abx = fam_sum / w_total;
  report.unfamiliar_mean_abx = unfam_sum / w_total;

  std::vector<double> pooled_fam, pooled_unfam;
  for (const auto& pc : cells) {
    pooled_fam.insert(pooled_fam.end(), pc.familiar.begin(),
                      pc.familiar.end());
    pooled_unfam.insert(pooled_unfam.end(), pc.unfamiliar.begin(),
                        pc.unfamiliar.end());
  }
  report.overall_p =
      fisher_pitman(pooled_unfam, pooled_fam, true, cfg.stats.n_resamples,
                    mix_seed(cfg.stats.seed, n_pairs), n_threads)
          .p_value;

  std::map<std::string, std::vector<double>> by_language;
  for (const auto& pr : report.pairs) {
    by_language[pr.language_a].push_back(pr.score.lfe_percent);
    by_language[pr.language_b].push_back(pr.score.lfe_percent);
  }
  report.mean_ci = guarded("stats", "cross-pair mean", "", [&] {
    return bootstrap_mean_ci(by_language, cfg.stats.level,
                             cfg.stats.n_resamples,
                             mix_seed(cfg.stats.seed, n_pairs + 1), "language");
  });

  std::map<std::string, std::string> families;
  bool labeled = true;
  for (const auto& lang : cfg.languages) {
    if (lang.family.empty()) {
      labeled = false;
      report.family_notice =
          strcat("family contrast skipped: language ", lang.name,
                 " has no family label");
      break;
    }
    families[lang.name] = lang.family;
  }
  if (labeled) {
    std::vector<LfeScore> scores;
    for (const auto& pr : report.pairs) scores.push_back(pr.score);
    try {
      report.family =
          family_contrast(scores, families, cfg.stats.level,
                          cfg.stats.n_resamples,
                          mix_seed(cfg.stats.seed, n_pairs + 2));
    } catch (const LfeError& e) {
      std::string_view what = e.what();
      const std::string_view name = error_name(e.code());
      if (what.substr(0, name.size()) == name &&
          what.substr(name.size(), 2) == ": ")
        what.remove_prefix(name.size() + 2);
      report.family_notice = strcat("family contrast skipped: ", what);
    }
  }

  // Condition cache keys for the provenance manifest; every ordered pair of
  // languages ran as a condition above.
  for (std::size_t i = 0; i < n_langs; ++i) {
    for (std::size_t j = 0; j < n_langs; ++j) {
      const LanguageConfig& test = cfg.languages[i];
      const LanguageConfig& train = cfg.languages[j];
      const FeatureDigests train_digests =
          prepare_features(cfg, train, n_threads);
      const FeatureDigests test_digests =
          test.name == train.name ? train_digests
                                  : prepare_features(cfg, test, n_threads);
      const std::string ivec_key = ivec_key_of(
          tv_key_of(cfg, ubm_key_of(cfg, train, train_digests.train)),
          test.name, test_digests.test);
      report.artifacts[strcat("ivectors:", test.name, "|", train.name)] =
          ivec_key;
      report.artifacts[strcat("abx:", test.name, "|", train.name)] =
          abx_key_of(cfg, ivec_key);
    }
  }

  report.finished_at = iso_utc_now();
  return report;
}

namespace {

// --- config file serialization ---

const ordered_json* find_key(const ordered_json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void check_keys(const ordered_json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok)
      raise(ErrorCode::kSchemaViolation, "unknown key \"", key, "\" in ",
            where);
  }
}

template <typename T>
T get_as(const ordered_json& j, const char* where) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    raise(ErrorCode::kSchemaViolation, "bad value for ", where, ": ",
          j.dump());
  }
}

template <typename T>
void load_field(const ordered_json& obj, const char* key, const char* where,
                T& out) {
  if (const ordered_json* j = find_key(obj, key))
    out = get_as<T>(*j, strcat(where, ".", key).c_str());
}

const ordered_json& require_key(const ordered_json& obj, const char* key,
                                const char* where) {
  const ordered_json* j = find_key(obj, key);
  if (!j)
    raise(ErrorCode::kSchemaViolation, "missing required key \"", key,
          "\" in ", where);
  return *j;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

std::string portable(const std::filesystem::path& base,
                     const std::filesystem::path& p) {
  std::error_code ec;
  const auto rel = std::filesystem::proximate(
      std::filesystem::absolute(p), std::filesystem::absolute(base), ec);
  return ec ? p.string() : rel.string();
}

}  // namespace

std::string ExperimentConfig::digest() const {
  std::string s = "config;v1";
  for (const auto& lang : languages)
    s += strcat(";lang=", lang.name, ",", lang.family);
  s += strcat(";feat=", features.config_hash());
  s += strcat(";ubm=", ubm.n_components, ",", ubm.max_iterations, ",",
              canon(ubm.convergence_tol), ",", ubm.seed);
  s += strcat(";tv=", tv.rank, ",", tv.n_iterations, ",", tv.seed);
  s += strcat(";abx=", abx.max_triplets ? strcat(*abx.max_triplets) : "none",
              ",", abx.seed);
  s += strcat(";stats=", stats.n_resamples, ",", canon(stats.alpha), ",",
              canon(stats.level), ",", stats.seed, ",",
              stats.weight_by_triplets ? 1 : 0);
  return to_hex16(fnv1a64(s));
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  ordered_json root;
  {
    const auto bytes = read_file_bytes(path);
    try {
      root = ordered_json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
      raise(ErrorCode::kSchemaViolation, path.string(), ": ", e.what());
    }
  }
  if (!root.is_object())
    raise(ErrorCode::kSchemaViolation, path.string(),
          ": top level must be an object");
  check_keys(root, "config",
             {"languages", "features", "ubm", "tv", "abx", "stats",
              "cache_dir", "output_dir"});

  const auto base = path.has_parent_path() ? path.parent_path()
                                           : std::filesystem::path(".");
  ExperimentConfig cfg;

  const ordered_json& langs = require_key(root, "languages", "config");
  if (!langs.is_array())
    raise(ErrorCode::kSchemaViolation, "languages must be an array");
  for (const auto& lj : langs) {
    if (!lj.is_object())
      raise(ErrorCode::kSchemaViolation, "each language must be an object");
    check_keys(lj, "language",
               {"name", "family", "train_manifest", "test_manifest"});
    LanguageConfig lang;
    lang.name = get_as<std::string>(require_key(lj, "name", "language"),
                                    "language.name");
    load_field(lj, "family", "language", lang.family);
    lang.train_manifest = resolve(
        base, get_as<std::string>(require_key(lj, "train_manifest", "language"),
                                  "language.train_manifest"));
    lang.test_manifest = resolve(
        base, get_as<std::string>(require_key(lj, "test_manifest", "language"),
                                  "language.test_manifest"));
    cfg.languages.push_back(std::move(lang));
  }

  if (const ordered_json* f = find_key(root, "features")) {
    check_keys(*f, "features",
               {"sample_rate_hz", "frame_length_ms", "frame_shift_ms",
                "n_mel_filters", "n_cepstra", "preemphasis", "add_deltas",
                "add_pitch", "cmn"});
    load_field(*f, "sample_rate_hz", "features", cfg.features.sample_rate_hz);
    load_field(*f, "frame_length_ms", "features",
               cfg.features.frame_length_ms);
    load_field(*f, "frame_shift_ms", "features", cfg.features.frame_shift_ms);
    load_field(*f, "n_mel_filters", "features", cfg.features.n_mel_filters);
    load_field(*f, "n_cepstra", "features", cfg.features.n_cepstra);
    load_field(*f, "preemphasis", "features", cfg.features.preemphasis);
    load_field(*f, "add_deltas", "features", cfg.features.add_deltas);
    load_field(*f, "add_pitch", "features", cfg.features.add_pitch);
    load_field(*f, "cmn", "features", cfg.features.cmn);
  }

  // Every stage seed must be present: a config is the complete record of an
  // experiment's randomness.
  const ordered_json& ubm = require_key(root, "ubm", "config");
  check_keys(ubm, "ubm",
             {"n_components", "max_iterations", "convergence_tol", "seed"});
  load_field(ubm, "n_components", "ubm", cfg.ubm.n_components);
  load_field(ubm, "max_iterations", "ubm", cfg.ubm.max_iterations);
  load_field(ubm, "convergence_tol", "ubm", cfg.ubm.convergence_tol);
  cfg.ubm.seed =
      get_as<std::uint64_t>(require_key(ubm, "seed", "ubm"), "ubm.seed");

  const ordered_json& tv = require_key(root, "tv", "config");
  check_keys(tv, "tv", {"rank", "n_iterations", "seed"});
  load_field(tv, "rank", "tv", cfg.tv.rank);
  load_field(tv, "n_iterations", "tv", cfg.tv.n_iterations);
  cfg.tv.seed =
      get_as<std::uint64_t>(require_key(tv, "seed", "tv"), "tv.seed");

  const ordered_json& abx = require_key(root, "abx", "config");
  check_keys(abx, "abx", {"max_triplets", "seed"});
  if (const ordered_json* mt = find_key(abx, "max_triplets")) {
    if (mt->is_null())
      cfg.abx.max_triplets = std::nullopt;
    else
      cfg.abx.max_triplets =
          get_as<std::uint64_t>(*mt, "abx.max_triplets");
  }
  cfg.abx.seed =
      get_as<std::uint64_t>(require_key(abx, "seed", "abx"), "abx.seed");

  const ordered_json& stats = require_key(root, "stats", "config");
  check_keys(stats, "stats",
             {"n_resamples", "alpha", "level", "weight_by_triplets", "seed"});
  load_field(stats, "n_resamples", "stats", cfg.stats.n_resamples);
  load_field(stats, "alpha", "stats", cfg.stats.alpha);
  load_field(stats, "level", "stats", cfg.stats.level);
  load_field(stats, "weight_by_triplets", "stats",
             cfg.stats.weight_by_triplets);
  cfg.stats.seed =
      get_as<std::uint64_t>(require_key(stats, "seed", "stats"), "stats.seed");

  std::string dir = "cache";
  load_field(root, "cache_dir", "config", dir);
  cfg.cache_dir = resolve(base, dir);
  dir = "out";
  load_field(root, "output_dir", "config", dir);
  cfg.output_dir = resolve(base, dir);
  if (const char* env = std::getenv("LFE_CACHE_DIR"); env && *env)
    cfg.cache_dir = env;

  validate_config(cfg);
  for (const auto& lang : cfg.languages) {
    for (const auto& m : {lang.train_manifest, lang.test_manifest})
      if (!std::filesystem::exists(m))
        raise(ErrorCode::kMissingFile, "manifest for language ", lang.name,
              " not found: ", m.string());
  }
  return cfg;
}

void save_experiment_config(const std::filesystem::path& path,
                            const ExperimentConfig& cfg) {
  const auto base = path.has_parent_path() ? path.parent_path()
                                           : std::filesystem::path(".");
  ordered_json root;
  root["languages"] = ordered_json::array();
  for (const auto& lang : cfg.languages) {
    ordered_json lj;
    lj["name"] = lang.name;
    lj["family"] = lang.family;
    lj["train_manifest"] = portable(base, lang.train_manifest);
    lj["test_manifest"] = portable(base, lang.test_manifest);
    root["languages"].push_back(std::move(lj));
  }
  root["features"] = {{"sample_rate_hz", cfg.features.sample_rate_hz},
                      {"frame_length_ms", cfg.features.frame_length_ms},
                      {"frame_shift_ms", cfg.features.frame_shift_ms},
                      {"n_mel_filters", cfg.features.n_mel_filters},
                      {"n_cepstra", cfg.features.n_cepstra},
                      {"preemphasis", cfg.features.preemphasis},
                      {"add_deltas", cfg.features.add_deltas},
                      {"add_pitch", cfg.features.add_pitch},
                      {"cmn", cfg.features.cmn}};
  root["ubm"] = {{"n_components", cfg.ubm.n_components},
                 {"max_iterations", cfg.ubm.max_iterations},
                 {"convergence_tol", cfg.ubm.convergence_tol},
                 {"seed", cfg.ubm.seed}};
  root["tv"] = {{"rank", cfg.tv.rank},
                {"n_iterations", cfg.tv.n_iterations},
                {"seed", cfg.tv.seed}};
  root["abx"] = {{"max_triplets",
                  cfg.abx.max_triplets
                      ? ordered_json(*cfg.abx.max_triplets)
                      : ordered_json(nullptr)},
                 {"seed", cfg.abx.seed}};
  root["stats"] = {{"n_resamples", cfg.stats.n_resamples},
                   {"alpha", cfg.stats.alpha},
                   {"level", cfg.stats.level},
                   {"weight_by_triplets", cfg.stats.weight_by_triplets},
                   {"seed", cfg.stats.seed}};
  root["cache_dir"] = portable(base, cfg.cache_dir);
  root["output_dir"] = portable(base, cfg.output_dir);
  atomic_write_file(path, root.dump(2) + "\n");
}

}  // namespace lfe
