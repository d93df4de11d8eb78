// src/stats.cpp

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

#include "lfe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "lfe/common.hpp"
#include "lfe/parallel.hpp"

namespace lfe {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

// Order-statistic quantile with linear interpolation between neighbors.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Resampled statistics with |stat*| >= |observed| count as extreme; the
// tolerance keeps exact ties (up to rounding) on the extreme side.
bool is_extreme(double resampled, double observed) {
  const double tol = 1e-12 * (1.0 + std::abs(observed));
  return std::abs(resampled) >= std::abs(observed) - tol;
}

BootstrapCI percentile_ci(std::vector<double> replicates, double level,
                          int n_resamples, std::uint64_t seed,
                          const std::string& unit_label) {
  std::sort(replicates.begin(), replicates.end());
  BootstrapCI ci;
  ci.level = level;
  ci.n_resamples = n_resamples;
  ci.seed = seed;
  ci.unit = unit_label;
  const double q = (1.0 - level) / 2.0;
  ci.lo = quantile_sorted(replicates, q);
  ci.hi = quantile_sorted(replicates, 1.0 - q);
  return ci;
}

}  // namespace

LfeScore lfe_score(double e_aa, double e_bb, double e_ab, double e_ba) {
  for (double e : {e_aa, e_bb, e_ab, e_ba})
    if (!(e >= 0.0 && e <= 1.0))
      raise(ErrorCode::kInvalidSpec, "error rates must lie in [0,1], got ", e);
  LfeScore s;
  s.s_same = 0.5 * (e_aa + e_bb);
  s.s_diff = 0.5 * (e_ab + e_ba);
  if (s.s_same <= 0.0)
    raise(ErrorCode::kDegenerateSame,
          "matched-training error is 0; relative increase is undefined");
  s.lfe_percent = 100.0 * (s.s_diff - s.s_same) / s.s_same;
  return s;
}

PermutationTestResult fisher_pitman(const std::vector<double>& group_a,
                                    const std::vector<double>& group_b,
                                    bool paired, int n_resamples,
                                    std::uint64_t seed, int n_threads) {
  if (group_a.empty() || group_b.empty())
    raise(ErrorCode::kEmptyGroup, "both groups must be non-empty");
  if (paired && group_a.size() != group_b.size())
    raise(ErrorCode::kLengthMismatch, "paired test got ", group_a.size(),
          " vs ", group_b.size(), " values");
  if (n_resamples < 1)
    raise(ErrorCode::kInvalidSpec, "n_resamples must be positive");

  PermutationTestResult result;
  result.paired = paired;
  result.n_resamples = n_resamples;
  result.seed = seed;
  result.statistic = mean_of(group_a) - mean_of(group_b);

  const double observed = result.statistic;
  std::vector<std::uint64_t> extreme(
      static_cast<std::size_t>(std::max(1, n_threads)), 0);

  if (paired) {
    std::vector<double> d(group_a.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = group_a[i] - group_b[i];
    const double inv_n = 1.0 / static_cast<double>(d.size());
    for_blocks_static(
        static_cast<std::size_t>(n_resamples), 256, n_threads,
        [&](int worker, std::size_t b, std::size_t e) {
          for (std::size_t r = b; r < e; ++r) {
            std::mt19937_64 rng(mix_seed(seed, r));
            double acc = 0.0;
            for (double di : d) acc += (rng() & 1) ? di : -di;
            if (is_extreme(acc * inv_n, observed))
              ++extreme[static_cast<std::size_t>(worker)];
          }
        });
  } else {
    std::vector<double> pooled(group_a);
    pooled.insert(pooled.end(), group_b.begin(), group_b.end());
    const std::size_t n = pooled.size();
    const std::size_t n1 = group_a.size();
    const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
    for_blocks_static(
        static_cast<std::size_t>(n_resamples), 256, n_threads,
        [&](int worker, std::size_t b, std::size_t e) {
          std::vector<std::size_t> idx(n);
          for (std::size_t r = b; r < e; ++r) {
            std::mt19937_64 rng(mix_seed(seed, r));
            std::iota(idx.begin(), idx.end(), 0);
            double sum_a = 0.0;
            for (std::size_t i = 0; i < n1; ++i) {
              const std::size_t j = i + rng() % (n - i);
              std::swap(idx[i], idx[j]);
              sum_a += pooled[idx[i]];
            }
            const double mean_a = sum_a / static_cast<double>(n1);
            const double mean_b =
                (total - sum_a) / static_cast<double>(n - n1);
            if (is_extreme(mean_a - mean_b, observed))
              ++extreme[static_cast<std::size_t>(worker)];
          }
        });
  }

  std::uint64_t count = 0;
  for (std::uint64_t c : extreme) count += c;
  result.p_value = static_cast<double>(1 + count) /
                   static_cast<double>(1 + n_resamples);
  return result;
}

std::vector<bool> bonferroni(const std::vector<double>& p_values,
                             double alpha) {
  if (p_values.empty())
    raise(ErrorCode::kInvalidSpec, "no p-values to correct");
  const double threshold = alpha / static_cast<double>(p_values.size());
  std::vector<bool> out(p_values.size());
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    if (!(p_values[i] > 0.0 && p_values[i] <= 1.0))
      raise(ErrorCode::kInvalidSpec, "p-value out of (0,1]: ", p_values[i]);
    out[i] = p_values[i] <= threshold;
  }
  return out;
}

std::string significance_stars(double p, std::size_t n_tests) {
  const double m = static_cast<double>(n_tests);
  if (p <= 0.005 / m) return "**";
  if (p <= 0.05 / m) return "*";
  return "";
}

BootstrapCI bootstrap_mean_ci(
    const std::map<std::string, std::vector<double>>& values_by_unit,
    double level, int n_resamples, std::uint64_t seed,
    const std::string& unit_label) {
  if (values_by_unit.size() < 2)
    raise(ErrorCode::kTooFewUnits, "need at least 2 units, have ",
          values_by_unit.size());
  if (!(level > 0.0 && level < 1.0))
    raise(ErrorCode::kInvalidSpec, "confidence level out of (0,1): ", level);
  if (n_resamples < 1)
    raise(ErrorCode::kInvalidSpec, "n_resamples must be positive");

  std::vector<double> sums;
  std::vector<double> counts;
  for (const auto& [unit, values] : values_by_unit) {
    if (values.empty())
      raise(ErrorCode::kEmptyGroup, "unit ", unit, " has no scores");
    sums.push_back(std::accumulate(values.begin(), values.end(), 0.0));
    counts.push_back(static_cast<double>(values.size()));
  }
  const std::size_t n_units = sums.size();

  std::vector<double> replicates(static_cast<std::size_t>(n_resamples));
  parallel_items(replicates.size(), 1, [&](std::size_t r) {
    std::mt19937_64 rng(mix_seed(seed, r));
    double sum = 0.0, count = 0.0;
    for (std::size_t i = 0; i < n_units; ++i) {
      const std::size_t pick = rng() % n_units;
      sum += sums[pick];
      count += counts[pick];
    }
    replicates[r] = sum / count;
  });
  return percentile_ci(std::move(replicates), level, n_resamples, seed,
                       unit_label);
}

FamilyContrast family_contrast(
    const std::vector<LfeScore>& scores,
    const std::map<std::string, std::string>& families, double level,
    int n_resamples, std::uint64_t seed) {
  if (scores.empty()) raise(ErrorCode::kEmptyGroup, "no pair scores");

  auto family_of = [&](const std::string& language) -> const std::string& {
    const auto it = families.find(language);
    if (it == families.end())
      raise(ErrorCode::kMissingFamilyLabel, "no family label for ", language);
    return it->second;
  };

  struct PairEntry {
    std::size_t lang_a, lang_b;  // indices into the language list
    bool same_family;
    double value;
  };

  // Languages drawn from the scores themselves, in sorted order.
  std::set<std::string> language_set;
  for (const auto& s : scores) {
    language_set.insert(s.language_a);
    language_set.insert(s.language_b);
  }
  std::vector<std::string> languages(language_set.begin(), language_set.end());
  auto index_of = [&](const std::string& language) {
    return static_cast<std::size_t>(
        std::lower_bound(languages.begin(), languages.end(), language) -
        languages.begin());
  };

  std::vector<PairEntry> pairs;
  std::vector<double> same_values, diff_values;
  for (const auto& s : scores) {
    PairEntry e;
    e.lang_a = index_of(s.language_a);
    e.lang_b = index_of(s.language_b);
    e.same_family = family_of(s.language_a) == family_of(s.language_b);
    e.value = s.lfe_percent;
    (e.same_family ? same_values : diff_values).push_back(e.value);
    pairs.push_back(e);
  }
  if (same_values.empty() || diff_values.empty())
    raise(ErrorCode::kMissingContrast,
          "need both same-family and different-family pairs, have ",
          same_values.size(), " and ", diff_values.size());

  FamilyContrast out;
  out.same_mean = mean_of(same_values);
  out.same_sd = sample_sd(same_values);
  out.same_n = static_cast<int>(same_values.size());
  out.diff_mean = mean_of(diff_values);
  out.diff_sd = sample_sd(diff_values);
  out.diff_n = static_cast<int>(diff_values.size());

  // Group languages by family for within-family resampling.
  std::map<std::string, std::vector<std::size_t>> by_family;
  for (std::size_t i = 0; i < languages.size(); ++i)
    by_family[family_of(languages[i])].push_back(i);

  std::vector<double> replicates(static_cast<std::size_t>(n_resamples));
  parallel_items(replicates.size(), 1, [&](std::size_t r) {
    std::mt19937_64 rng(mix_seed(seed, r));
    std::vector<double> draw_count(languages.size());
    // A replicate can miss one of the groups entirely; redraw within the
    // same stream, bounded.
    for (int attempt = 0; attempt < 100; ++attempt) {
      std::fill(draw_count.begin(), draw_count.end(), 0.0);
      for (const auto& [family, members] : by_family)
        for (std::size_t i = 0; i < members.size(); ++i)
          draw_count[members[rng() % members.size()]] += 1.0;
      double same_w = 0.0, same_ws = 0.0, diff_w = 0.0, diff_ws = 0.0;
      for (const auto& e : pairs) {
        const double w = draw_count[e.lang_a] * draw_count[e.lang_b];
        if (w == 0.0) continue;
        if (e.same_family) {
          same_w += w;
          same_ws += w * e.value;
        } else {
          diff_w += w;
          diff_ws += w * e.value;
        }
      }
      if (same_w > 0.0 && diff_w > 0.0) {
        replicates[r] = diff_ws / diff_w - same_ws / same_w;
        return;
      }
    }
    raise(ErrorCode::kEmptyGroup,
          "family bootstrap kept drawing an empty group; too few languages");
  });
  out.difference_ci = percentile_ci(std::move(replicates), level, n_resamples,
                                    seed, "language-within-family");
  return out;
}

}  // namespace lfe
