// include/lfe/stats.hpp

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

#ifndef LFE_STATS_HPP_
#define LFE_STATS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lfe {

// Familiarity effect for one language pair, from the four train/test
// condition error rates.
struct LfeScore {
  std::string language_a;
  std::string language_b;
  double s_same = 0.0;       // mean of the two matched-training conditions
  double s_diff = 0.0;       // mean of the two mismatched conditions
  double lfe_percent = 0.0;  // 100 * (s_diff - s_same) / s_same
  double p_value = 1.0;
  bool significant = false;
  std::string stars;  // "", "*" or "**" after correction
};

// e_aa = language A tested with A-trained models, e_ab = A tested with
// B-trained models, and so on.
LfeScore lfe_score(double e_aa, double e_bb, double e_ab, double e_ba);

struct PermutationTestResult {
  double statistic = 0.0;  // mean(group_a) - mean(group_b)
  double p_value = 1.0;
  int n_resamples = 0;
  bool paired = false;
  std::uint64_t seed = 0;
};

// Two-tailed Fisher-Pitman permutation test with Monte-Carlo sampling.  The
// unpaired variant permutes group labels over the pooled values; the paired
// variant flips the signs of per-unit differences.  The p-value uses the
// add-one estimator (1 + #extreme) / (1 + n_resamples), so it is never 0.
// Exactly reproducible for a given (seed, n_resamples) at any thread count.
PermutationTestResult fisher_pitman(const std::vector<double>& group_a,
                                    const std::vector<double>& group_b,
                                    bool paired, int n_resamples,
                                    std::uint64_t seed, int n_threads = 1);

// Significant iff p <= alpha / #tests.
std::vector<bool> bonferroni(const std::vector<double>& p_values,
                             double alpha);

// "**" when p clears the corrected 0.005 level, "*" for 0.05, else "".
std::string significance_stars(double p, std::size_t n_tests);

struct BootstrapCI {
  double level = 0.95;
  double lo = 0.0;
  double hi = 0.0;
  int n_resamples = 0;
  std::string unit;
  std::uint64_t seed = 0;
};

// Percentile bootstrap of the pooled mean: units are resampled with
// replacement and every score attached to a drawn unit enters the mean.
BootstrapCI bootstrap_mean_ci(
    const std::map<std::string, std::vector<double>>& values_by_unit,
    double level, int n_resamples, std::uint64_t seed,
    const std::string& unit_label = "language");

struct FamilyContrast {
  double same_mean = 0.0, same_sd = 0.0;
  double diff_mean = 0.0, diff_sd = 0.0;
  int same_n = 0, diff_n = 0;
  BootstrapCI difference_ci;  // different-family mean minus same-family mean
};

// Splits pair scores by whether the two languages share a family label and
// bootstraps the group difference, resampling languages within family.
FamilyContrast family_contrast(
    const std::vector<LfeScore>& scores,
    const std::map<std::string, std::string>& families, double level,
    int n_resamples, std::uint64_t seed);

}  // namespace lfe

#endif  // LFE_STATS_HPP_
