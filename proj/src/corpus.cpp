// src/corpus.cpp

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

#include "lfe/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lfe/common.hpp"
#include "lfe/io.hpp"

namespace lfe {

namespace {

using json = nlohmann::json;

const std::set<std::string> kManifestKeys = {
    "utterance_id", "speaker_id", "language", "accent",
    "family",       "audio_path", "duration_s"};

UtteranceRecord parse_record(const json& j, const std::string& where) {
  auto violation = [&](const std::string& what) {
    raise(ErrorCode::kSchemaViolation, strcat(where, ": ", what));
  };

  if (!j.is_object()) violation("record is not an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (kManifestKeys.count(key) == 0) violation(strcat("unknown key '", key, "'"));
  }
  for (const auto& key : kManifestKeys)
    if (!j.contains(key)) violation(strcat("missing key '", key, "'"));

  UtteranceRecord rec;
  auto get_str = [&](const char* key) -> std::string {
    if (!j.at(key).is_string()) violation(strcat("'", key, "' must be a string"));
    return j.at(key).get<std::string>();
  };
  rec.utterance_id = get_str("utterance_id");
  rec.speaker_id = get_str("speaker_id");
  rec.language = get_str("language");
  rec.accent = get_str("accent");
  rec.family = get_str("family");
  rec.audio_path = get_str("audio_path");
  if (!j.at("duration_s").is_number())
    violation("'duration_s' must be a number");
  rec.duration_s = j.at("duration_s").get<double>();

  if (rec.utterance_id.empty()) violation("empty utterance_id");
  if (rec.speaker_id.empty()) violation("empty speaker_id");
  if (rec.language.empty()) violation("empty language");
  if (!(rec.duration_s > 0.0)) violation("duration_s must be > 0");
  if (rec.accent.empty()) violation("empty accent (use \"native\")");
  if (rec.accent != "native" && rec.accent == rec.language)
    violation("accent must be \"native\" or a language code distinct from 'language'");
  return rec;
}

}  // namespace

std::vector<UtteranceRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) raise(ErrorCode::kMissingFile, path.string());

  std::vector<UtteranceRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = strcat(path.string(), " line ", line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      raise(ErrorCode::kSchemaViolation, strcat(where, ": ", e.what()));
    }
    UtteranceRecord rec = parse_record(j, where);
    if (!seen_ids.insert(rec.utterance_id).second)
      raise(ErrorCode::kDuplicateUtteranceId,
            strcat(where, ": '", rec.utterance_id, "'"));
    records.push_back(std::move(rec));
  }
  return records;
}

void save_manifest(const std::filesystem::path& path,
                   const std::vector<UtteranceRecord>& records) {
  atomic_write_file(path, [&](std::ostream& os) {
    for (const auto& rec : records) {
      nlohmann::ordered_json j;
      j["utterance_id"] = rec.utterance_id;
      j["speaker_id"] = rec.speaker_id;
      j["language"] = rec.language;
      j["accent"] = rec.accent;
      j["family"] = rec.family;
      j["audio_path"] = rec.audio_path;
      j["duration_s"] = rec.duration_s;
      os << j.dump() << "\n";
    }
  });
}

Split make_split(const std::vector<UtteranceRecord>& records,
                 const SplitSpec& spec) {
  if (spec.n_speakers < 2)
    raise(ErrorCode::kInvalidSpec, "a test split needs n_speakers >= 2");
  if (!(spec.target_total_duration_s > 0.0))
    raise(ErrorCode::kInvalidSpec, "target_total_duration_s must be > 0");

  // Group by speaker; sorted ids keep the shuffle a pure function of the seed.
  std::map<std::string, std::vector<const UtteranceRecord*>> by_speaker;
  for (const auto& rec : records) by_speaker[rec.speaker_id].push_back(&rec);

  std::vector<std::string> speakers;
  speakers.reserve(by_speaker.size());
  for (const auto& [id, utts] : by_speaker) {
    (void)utts;
    speakers.push_back(id);
  }

  std::mt19937_64 rng(spec.seed);
  std::shuffle(speakers.begin(), speakers.end(), rng);

  const double per_speaker_target =
      spec.target_total_duration_s / spec.n_speakers;
  // Per-speaker window that keeps the max-min spread under 20% of the mean.
  const double lo = spec.per_speaker_balance ? 0.92 * per_speaker_target : 0.0;
  const double hi = spec.per_speaker_balance
                        ? 1.08 * per_speaker_target
                        : std::numeric_limits<double>::infinity();

  std::vector<std::string> chosen;
  std::set<std::string> test_ids;
  std::ostringstream shortfalls;
  for (const auto& speaker : speakers) {
    if (static_cast<int>(chosen.size()) == spec.n_speakers) break;
    auto utts = by_speaker[speaker];
    std::sort(utts.begin(), utts.end(),
              [](const UtteranceRecord* a, const UtteranceRecord* b) {
                return a->utterance_id < b->utterance_id;
              });
    std::shuffle(utts.begin(), utts.end(), rng);

    // Greedy fill toward the target; prefer an utterance that stays inside
    // the window, otherwise take the shortest remaining one.
    std::vector<const UtteranceRecord*> picked;
    double total = 0.0;
    std::vector<const UtteranceRecord*> pool = utts;
    while (total < lo || (!spec.per_speaker_balance && total < per_speaker_target)) {
      if (pool.empty()) break;
      std::size_t pick = pool.size();
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (total + pool[i]->duration_s <= hi) {
          pick = i;
          break;
        }
      }
      if (pick == pool.size()) {
        // Nothing fits the window; take the shortest remaining utterance.
        pick = 0;
        for (std::size_t i = 1; i < pool.size(); ++i)
          if (pool[i]->duration_s < pool[pick]->duration_s) pick = i;
      }
      total += pool[pick]->duration_s;
      picked.push_back(pool[pick]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }

    const bool ok = spec.per_speaker_balance
                        ? (total >= lo && total <= hi)
                        : total >= per_speaker_target;
    if (!ok) {
      shortfalls << "  speaker " << speaker << ": has "
                 << total << "s usable of " << per_speaker_target
                 << "s target\n";
      continue;
    }
    chosen.push_back(speaker);
    for (const auto* rec : picked) test_ids.insert(rec->utterance_id);
  }

  if (static_cast<int>(chosen.size()) < spec.n_speakers) {
    raise(ErrorCode::kInsufficientData,
          strcat("only ", chosen.size(), " of ", spec.n_speakers,
                 " requested test speakers satisfiable; shortfalls:\n",
                 shortfalls.str()));
  }

  const std::set<std::string> test_speakers(chosen.begin(), chosen.end());
  Split split;
  for (const auto& rec : records) {
    if (test_ids.count(rec.utterance_id)) {
      split.test.push_back(rec);
    } else if (test_speakers.count(rec.speaker_id) == 0) {
      split.train.push_back(rec);
    }
    // Unpicked utterances of test speakers are dropped: train/test speaker
    // sets must stay disjoint.
  }
  return split;
}

std::vector<std::pair<double, double>> energy_vad(std::span<const float> samples,
                                                  double frame_ms,
                                                  double threshold_db,
                                                  int sample_rate_hz) {
  if (samples.empty()) raise(ErrorCode::kEmptyAudio, "energy_vad");
  const std::size_t frame_len = static_cast<std::size_t>(
      std::max(1.0, std::floor(frame_ms * 1e-3 * sample_rate_hz)));
  const std::size_t n_frames = samples.size() / frame_len;

  std::vector<std::pair<double, double>> segments;
  bool in_speech = false;
  std::size_t seg_start = 0;
  for (std::size_t t = 0; t < n_frames; ++t) {
    double energy = 0.0;
    for (std::size_t i = 0; i < frame_len; ++i) {
      const double s = samples[t * frame_len + i];
      energy += s * s;
    }
    energy /= static_cast<double>(frame_len);
    const double db = 10.0 * std::log10(energy + 1e-12);
    const bool speech = db > threshold_db;
    if (speech && !in_speech) {
      in_speech = true;
      seg_start = t;
    } else if (!speech && in_speech) {
      in_speech = false;
      segments.emplace_back(seg_start * frame_len / double(sample_rate_hz),
                            t * frame_len / double(sample_rate_hz));
    }
  }
  if (in_speech)
    segments.emplace_back(seg_start * frame_len / double(sample_rate_hz),
                          n_frames * frame_len / double(sample_rate_hz));
  return segments;
}

}  // namespace lfe
