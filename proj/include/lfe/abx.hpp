// include/lfe/abx.hpp

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

// Machine ABX speaker discrimination: for a triplet (a, b, x) with a and x
// from one speaker and b from another, the representation errs when x lies
// closer to b than to a in Euclidean distance.

#ifndef LFE_ABX_HPP_
#define LFE_ABX_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lfe/tvspace.hpp"

namespace lfe {

struct Triplet {
  std::string a;
  std::string b;
  std::string x;
  std::string speaker_ax;
  std::string speaker_b;
};

// One ordered speaker pair: a and x drawn from speaker_a, b from speaker_b.
// Errors accumulate in half units so the reduction stays integral.
struct AbxCell {
  std::string speaker_a;
  std::string speaker_b;
  std::uint64_t n_scored = 0;
  std::uint64_t population = 0;  // n1*(n1-1)*n2
  std::uint64_t err2 = 0;        // twice the summed error weight

  double error_rate() const {
    return static_cast<double>(err2) / (2.0 * static_cast<double>(n_scored));
  }
};

struct AbxResult {
  std::string test_language;
  std::string train_language;
  bool sampled = false;
  std::uint64_t seed = 0;
  std::vector<AbxCell> cells;  // ordered by (speaker_a, speaker_b)

  std::uint64_t n_triplets() const;
  std::uint64_t population() const;
  std::uint64_t total_err2() const;
  // Micro average over all scored triplets.
  double error_rate() const;
};

struct AbxConfig {
  // Cells are sampled proportionally once the population exceeds the cap;
  // unset means always exhaustive.
  std::optional<std::uint64_t> max_triplets = 2000000;
  std::uint64_t seed = 0;
  int n_threads = 1;
};

// 1 when x is strictly closer to b, 0.5 on an exact tie, 0 otherwise.
double score_triplet(const Eigen::VectorXf& a, const Eigen::VectorXf& b,
                     const Eigen::VectorXf& x);

// The triplet sequence abx_error scores, materialized.  Exhaustive when the
// population fits under the cap, otherwise stratified seeded sampling
// without replacement inside every speaker-pair cell.
std::vector<Triplet> enumerate_triplets(
    const IvectorSet& ivs, std::optional<std::uint64_t> max_triplets,
    std::uint64_t seed);

// Scores the full triplet sequence; exact reproducibility for a given
// (seed, max_triplets) independent of thread count.
AbxResult abx_error(const IvectorSet& ivs, const AbxConfig& cfg);

// Structured text (JSON) report round-trip.
void write_abx(const std::filesystem::path& path, const AbxResult& result);
AbxResult read_abx(const std::filesystem::path& path);

}  // namespace lfe

#endif  // LFE_ABX_HPP_
