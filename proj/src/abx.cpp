// src/abx.cpp

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

#include "lfe/abx.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <unordered_set>

#include <json.hpp>

#include "lfe/io.hpp"
#include "lfe/parallel.hpp"

namespace lfe {

namespace {

struct SpeakerGroup {
  std::string speaker_id;
  std::vector<std::uint32_t> utts;  // indices into records, id-sorted
};

// Speakers and their utterances in a canonical order, so results do not
// depend on record order in the input set.
std::vector<SpeakerGroup> group_speakers(const IvectorSet& ivs) {
  std::map<std::string, std::vector<std::uint32_t>> by_speaker;
  for (std::uint32_t i = 0; i < ivs.records.size(); ++i)
    by_speaker[ivs.records[i].speaker_id].push_back(i);
  std::vector<SpeakerGroup> groups;
  groups.reserve(by_speaker.size());
  for (auto& [speaker, utts] : by_speaker) {
    std::sort(utts.begin(), utts.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                return ivs.records[a].utterance_id <
                       ivs.records[b].utterance_id;
              });
    groups.push_back({speaker, std::move(utts)});
  }
  return groups;
}

struct CellPlan {
  std::uint32_t spk_a = 0;  // indices into the speaker groups
  std::uint32_t spk_b = 0;
  std::uint64_t population = 0;
  std::uint64_t quota = 0;
};

// Decodes a flat index into (a, x, b) positions within a cell.  a and x run
// over the n1 utterances of the first speaker (a != x), b over the n2 of the
// second.
struct TripletIndex {
  std::uint32_t a, x, b;
};

TripletIndex decode_triplet(std::uint64_t i, std::uint64_t n1,
                            std::uint64_t n2) {
  const std::uint64_t p = i / n2;
  const std::uint32_t b = static_cast<std::uint32_t>(i % n2);
  const std::uint32_t a = static_cast<std::uint32_t>(p / (n1 - 1));
  const std::uint32_t q = static_cast<std::uint32_t>(p % (n1 - 1));
  return {a, q < a ? q : q + 1, b};
}

// Distinct draws from [0, population) via Floyd's algorithm, returned sorted.
std::vector<std::uint64_t> sample_without_replacement(std::uint64_t population,
                                                      std::uint64_t quota,
                                                      std::mt19937_64& rng) {
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(quota) * 2);
  for (std::uint64_t j = population - quota; j < population; ++j) {
    const std::uint64_t t = rng() % (j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

struct Plan {
  std::vector<SpeakerGroup> groups;
  std::vector<CellPlan> cells;
  bool sampled = false;
};

Plan plan_cells(const IvectorSet& ivs,
                std::optional<std::uint64_t> max_triplets) {
  Plan plan;
  plan.groups = group_speakers(ivs);
  if (plan.groups.size() < 2)
    raise(ErrorCode::kTooFewSpeakers, "need at least 2 speakers, have ",
          plan.groups.size());

  std::uint64_t total = 0;
  for (std::uint32_t sa = 0; sa < plan.groups.size(); ++sa) {
    const std::uint64_t n1 = plan.groups[sa].utts.size();
    if (n1 < 2) continue;
    for (std::uint32_t sb = 0; sb < plan.groups.size(); ++sb) {
      if (sb == sa) continue;
      const std::uint64_t n2 = plan.groups[sb].utts.size();
      CellPlan cell;
      cell.spk_a = sa;
      cell.spk_b = sb;
      cell.population = n1 * (n1 - 1) * n2;
      total += cell.population;
      plan.cells.push_back(cell);
    }
  }
  if (total == 0)
    raise(ErrorCode::kTooFewSpeakers,
          "no speaker has 2 utterances; no triplets can be formed");

  if (!max_triplets || total <= *max_triplets) {
    for (auto& cell : plan.cells) cell.quota = cell.population;
    return plan;
  }

  // Largest-remainder quotas proportional to cell populations.  Because the
  // cap is below the total, every base share stays below its population.
  plan.sampled = true;
  const std::uint64_t cap = *max_triplets;
  std::uint64_t assigned = 0;
  std::vector<std::pair<std::uint64_t, std::size_t>> remainders;
  for (std::size_t i = 0; i < plan.cells.size(); ++i) {
    auto& cell = plan.cells[i];
    const unsigned __int128 scaled =
        static_cast<unsigned __int128>(cap) * cell.population;
    cell.quota = static_cast<std::uint64_t>(scaled / total);
    assigned += cell.quota;
    remainders.emplace_back(static_cast<std::uint64_t>(scaled % total), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) {
                     return a.first > b.first;
                   });
  std::uint64_t leftover = cap - assigned;
  for (const auto& [rem, idx] : remainders) {
    if (leftover == 0) break;
    if (plan.cells[idx].quota < plan.cells[idx].population) {
      ++plan.cells[idx].quota;
      --leftover;
    }
  }
  return plan;
}

}  // namespace

std::uint64_t AbxResult::n_triplets() const {
  std::uint64_t n = 0;
  for (const auto& c : cells) n += c.n_scored;
  return n;
}

std::uint64_t AbxResult::population() const {
  std::uint64_t n = 0;
  for (const auto& c : cells) n += c.population;
  return n;
}

std::uint64_t AbxResult::total_err2() const {
  std::uint64_t n = 0;
  for (const auto& c : cells) n += c.err2;
  return n;
}

double AbxResult::error_rate() const {
  return static_cast<double>(total_err2()) /
         (2.0 * static_cast<double>(n_triplets()));
}

double score_triplet(const Eigen::VectorXf& a, const Eigen::VectorXf& b,
                     const Eigen::VectorXf& x) {
  if (a.size() != x.size() || b.size() != x.size())
    raise(ErrorCode::kDimensionMismatch, "triplet vectors have sizes ",
          a.size(), "/", b.size(), "/", x.size());
  const double da = (a - x).cast<double>().squaredNorm();
  const double db = (b - x).cast<double>().squaredNorm();
  if (da > db) return 1.0;
  if (da == db) return 0.5;
  return 0.0;
}

std::vector<Triplet> enumerate_triplets(
    const IvectorSet& ivs, std::optional<std::uint64_t> max_triplets,
    std::uint64_t seed) {
  const Plan plan = plan_cells(ivs, max_triplets);
  std::vector<Triplet> out;
  for (std::size_t ci = 0; ci < plan.cells.size(); ++ci) {
    const CellPlan& cell = plan.cells[ci];
    const auto& ga = plan.groups[cell.spk_a];
    const auto& gb = plan.groups[cell.spk_b];
    const std::uint64_t n1 = ga.utts.size();
    const std::uint64_t n2 = gb.utts.size();

    auto emit = [&](std::uint64_t flat) {
      const TripletIndex t = decode_triplet(flat, n1, n2);
      Triplet trip;
      trip.a = ivs.records[ga.utts[t.a]].utterance_id;
      trip.x = ivs.records[ga.utts[t.x]].utterance_id;
      trip.b = ivs.records[gb.utts[t.b]].utterance_id;
      trip.speaker_ax = ga.speaker_id;
      trip.speaker_b = gb.speaker_id;
      out.push_back(std::move(trip));
    };
    if (cell.quota == cell.population) {
      for (std::uint64_t i = 0; i < cell.population; ++i) emit(i);
    } else {
      std::mt19937_64 rng(mix_seed(seed, ci));
      for (std::uint64_t i :
           sample_without_replacement(cell.population, cell.quota, rng))
        emit(i);
    }
  }
  return out;
}

AbxResult abx_error(const IvectorSet& ivs, const AbxConfig& cfg) {
  for (const auto& rec : ivs.records)
    if (rec.w.size() != static_cast<Eigen::Index>(ivs.rank))
      raise(ErrorCode::kDimensionMismatch, "i-vector for ", rec.utterance_id,
            " has size ", rec.w.size(), ", set claims ", ivs.rank);

  const Plan plan = plan_cells(ivs, cfg.max_triplets);

  // All pairwise squared distances, precomputed when the set is small
  // enough; 4096 points cost 128 MB.
  const std::size_t n_points = ivs.records.size();
  Eigen::MatrixXd dist2;
  const bool use_table = n_points <= 4096;
  if (use_table) {
    Eigen::MatrixXd w(n_points, ivs.rank);
    for (std::size_t i = 0; i < n_points; ++i)
      w.row(static_cast<Eigen::Index>(i)) =
          ivs.records[i].w.cast<double>().transpose();
    const Eigen::VectorXd sq = w.rowwise().squaredNorm();
    dist2 = -2.0 * (w * w.transpose());
    dist2.colwise() += sq;
    dist2.rowwise() += sq.transpose();
  }
  auto d2 = [&](std::uint32_t i, std::uint32_t j) -> double {
    if (use_table) return dist2(i, j);
    return (ivs.records[i].w - ivs.records[j].w).cast<double>().squaredNorm();
  };

  AbxResult result;
  if (!ivs.records.empty()) {
    result.test_language = ivs.records.front().test_language;
    result.train_language = ivs.records.front().train_language;
  }
  result.sampled = plan.sampled;
  result.seed = cfg.seed;
  result.cells.resize(plan.cells.size());

  parallel_items(plan.cells.size(), cfg.n_threads, [&](std::size_t ci) {
    const CellPlan& cell = plan.cells[ci];
    const auto& ga = plan.groups[cell.spk_a];
    const auto& gb = plan.groups[cell.spk_b];
    const std::uint64_t n1 = ga.utts.size();
    const std::uint64_t n2 = gb.utts.size();

    AbxCell& out = result.cells[ci];
    out.speaker_a = ga.speaker_id;
    out.speaker_b = gb.speaker_id;
    out.population = cell.population;
    out.n_scored = cell.quota;

    auto score = [&](std::uint64_t flat) {
      const TripletIndex t = decode_triplet(flat, n1, n2);
      const double da = d2(ga.utts[t.a], ga.utts[t.x]);
      const double db = d2(gb.utts[t.b], ga.utts[t.x]);
      if (da > db)
        out.err2 += 2;
      else if (da == db)
        out.err2 += 1;
    };
    if (cell.quota == cell.population) {
      for (std::uint64_t i = 0; i < cell.population; ++i) score(i);
    } else {
      std::mt19937_64 rng(mix_seed(cfg.seed, ci));
      for (std::uint64_t i :
           sample_without_replacement(cell.population, cell.quota, rng))
        score(i);
    }
  });
  return result;
}

void write_abx(const std::filesystem::path& path, const AbxResult& result) {
  nlohmann::ordered_json j;
  j["test_language"] = result.test_language;
  j["train_language"] = result.train_language;
  j["sampled"] = result.sampled;
  j["seed"] = result.seed;
  j["n_triplets"] = result.n_triplets();
  j["error_rate"] = result.error_rate();
  auto& cells = j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : result.cells) {
    cells.push_back({{"speaker_a", c.speaker_a},
                     {"speaker_b", c.speaker_b},
                     {"n_scored", c.n_scored},
                     {"population", c.population},
                     {"err2", c.err2}});
  }
  atomic_write_file(path, j.dump(2) + "\n");
}

AbxResult read_abx(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::kMissingFile, "cannot open ", path.string());
  AbxResult result;
  try {
    const auto j = nlohmann::json::parse(in);
    result.test_language = j.at("test_language").get<std::string>();
    result.train_language = j.at("train_language").get<std::string>();
    result.sampled = j.at("sampled").get<bool>();
    result.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& c : j.at("cells")) {
      AbxCell cell;
      cell.speaker_a = c.at("speaker_a").get<std::string>();
      cell.speaker_b = c.at("speaker_b").get<std::string>();
      cell.n_scored = c.at("n_scored").get<std::uint64_t>();
      cell.population = c.at("population").get<std::uint64_t>();
      cell.err2 = c.at("err2").get<std::uint64_t>();
      result.cells.push_back(std::move(cell));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kIoError, path.string(), ": ", e.what());
  }
  return result;
}

}  // namespace lfe
