// tests/test_stats.cpp

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lfe/common.hpp"
#include "lfe/stats.hpp"
#include "oracles.hpp"

namespace {

void check_raises(lfe::ErrorCode code, const std::string& fragment,
                  const std::function<void()>& fn) {
  try {
    fn();
    FAIL("expected an error with code ", static_cast<int>(code));
  } catch (const lfe::LfeError& e) {
    CHECK(e.code() == code);
    const std::string msg = e.what();
    INFO("message: " << msg);
    CHECK(msg.find(fragment) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("lfe_score is the relative error increase of mismatched training") {
  // Matched rate s, both mismatched rates s*(1+r): the score is exactly 100r.
  for (double s : {0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5}) {
    for (double r : {-0.5, -0.25, 0.0, 0.1, 0.25, 0.5, 0.75, 1.0}) {
      const lfe::LfeScore score =
          lfe::lfe_score(s, s, s * (1.0 + r), s * (1.0 + r));
      CHECK(std::abs(score.lfe_percent - 100.0 * r) < 1e-9);
      CHECK(score.s_same == doctest::Approx(s).epsilon(1e-12));
      CHECK(score.s_diff == doctest::Approx(s * (1.0 + r)).epsilon(1e-12));
    }
  }

  const lfe::LfeScore s = lfe::lfe_score(0.1, 0.2, 0.3, 0.4);
  CHECK(s.s_same == doctest::Approx(0.15));
  CHECK(s.s_diff == doctest::Approx(0.35));
  CHECK(s.lfe_percent == doctest::Approx(100.0 * (0.35 - 0.15) / 0.15));
  // Test-level fields start neutral; significance is attached downstream.
  CHECK(s.p_value == 1.0);
  CHECK_FALSE(s.significant);
  CHECK(s.stars.empty());
}

TEST_CASE("lfe_score rejects degenerate and out-of-range rates") {
  check_raises(lfe::ErrorCode::kDegenerateSame, "matched-training error",
               [] { lfe::lfe_score(0.0, 0.0, 0.1, 0.1); });
  check_raises(lfe::ErrorCode::kInvalidSpec, "[0,1]",
               [] { lfe::lfe_score(-0.1, 0.2, 0.3, 0.4); });
  check_raises(lfe::ErrorCode::kInvalidSpec, "[0,1]",
               [] { lfe::lfe_score(0.1, 0.2, 1.5, 0.4); });
  const double nan = std::nan("");
  check_raises(lfe::ErrorCode::kInvalidSpec, "[0,1]",
               [=] { lfe::lfe_score(nan, 0.2, 0.3, 0.4); });
}

TEST_CASE("unpaired test matches exhaustive enumeration on small groups") {
  // Monte-Carlo p = (1 + X) / (1 + B) with X ~ Binomial(B, p_exact), so the
  // estimate must land within a 5-sigma binomial band around the exact value.
  std::mt19937_64 rng(20260816);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int kResamples = 200000;

  const std::vector<std::pair<int, int>> shapes = {
      {3, 3}, {4, 4}, {2, 6}, {5, 3}, {4, 3}, {2, 2}};
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    std::vector<double> a(static_cast<std::size_t>(shapes[i].first));
    std::vector<double> b(static_cast<std::size_t>(shapes[i].second));
    for (double& x : a) x = gauss(rng);
    for (double& x : b) x = gauss(rng) + 0.5;

    const double exact = oracle::exhaustive_permutation_unpaired(a, b);
    const lfe::PermutationTestResult got =
        lfe::fisher_pitman(a, b, false, kResamples, 91 + i);
    const double slack =
        5.0 * std::sqrt(exact * (1.0 - exact) / kResamples) +
        2.0 / (kResamples + 1.0);
    INFO("shape " << shapes[i].first << "v" << shapes[i].second << " exact "
                  << exact << " got " << got.p_value);
    CHECK(std::abs(got.p_value - exact) <= slack);
    CHECK_FALSE(got.paired);
    CHECK(got.n_resamples == kResamples);
  }
}

TEST_CASE("paired test matches exhaustive sign flips") {
  std::mt19937_64 rng(992);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int kResamples = 200000;

  for (std::size_t n : {2u, 4u, 6u, 8u}) {
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = gauss(rng) + 0.4;
      b[i] = gauss(rng);
    }
    const double exact = oracle::exhaustive_permutation_paired(a, b);
    const lfe::PermutationTestResult got =
        lfe::fisher_pitman(a, b, true, kResamples, 7 * n);
    const double slack =
        5.0 * std::sqrt(exact * (1.0 - exact) / kResamples) +
        2.0 / (kResamples + 1.0);
    INFO("n " << n << " exact " << exact << " got " << got.p_value);
    CHECK(std::abs(got.p_value - exact) <= slack);
    CHECK(got.paired);
  }
}

TEST_CASE("constant opposite groups give the exact two-sided tail") {
  // 4 zeros vs 4 ones: of the C(8,4) = 70 relabelings only the original and
  // its mirror reach |mean difference| = 1, so the exact p is 2/70.
  const std::vector<double> zeros = {0.0, 0.0, 0.0, 0.0};
  const std::vector<double> ones = {1.0, 1.0, 1.0, 1.0};
  CHECK(oracle::exhaustive_permutation_unpaired(zeros, ones) == 2.0 / 70.0);

  const int kResamples = 400000;
  const lfe::PermutationTestResult got =
      lfe::fisher_pitman(zeros, ones, false, kResamples, 5);
  const double exact = 2.0 / 70.0;
  const double slack = 5.0 * std::sqrt(exact * (1.0 - exact) / kResamples) +
                       2.0 / (kResamples + 1.0);
  CHECK(std::abs(got.p_value - exact) <= slack);
  CHECK(got.statistic == doctest::Approx(-1.0));
}

TEST_CASE("null p-values are uniform for both variants") {
  // With exchangeable groups the p-value must be (sub)uniform; the KS
  // distance over 1000 trials stays below the 1% critical value.
  const std::size_t kTrials = 1000;
  const double kCritical = 1.6276 / std::sqrt(static_cast<double>(kTrials));

  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> unpaired_p(kTrials), paired_p(kTrials);
  for (std::size_t t = 0; t < kTrials; ++t) {
    std::vector<double> a(6), b(6);
    for (double& x : a) x = gauss(rng);
    for (double& x : b) x = gauss(rng);
    unpaired_p[t] = lfe::fisher_pitman(a, b, false, 999, 1000 + t).p_value;
    paired_p[t] = lfe::fisher_pitman(a, b, true, 999, 5000 + t).p_value;
  }
  const double d_unpaired = oracle::ks_uniform(unpaired_p);
  const double d_paired = oracle::ks_uniform(paired_p);
  INFO("KS unpaired " << d_unpaired << " paired " << d_paired << " critical "
                      << kCritical);
  CHECK(d_unpaired < kCritical);
  CHECK(d_paired < kCritical);
}

TEST_CASE("permutation test is reproducible and thread-count invariant") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> a(9), b(7);
  for (double& x : a) x = gauss(rng) + 0.3;
  for (double& x : b) x = gauss(rng);

  const auto r1 = lfe::fisher_pitman(a, b, false, 20001, 12345, 1);
  const auto r2 = lfe::fisher_pitman(a, b, false, 20001, 12345, 1);
  const auto r8 = lfe::fisher_pitman(a, b, false, 20001, 12345, 8);
  CHECK(r1.p_value == r2.p_value);
  CHECK(r1.p_value == r8.p_value);
  CHECK(r1.statistic == r8.statistic);
  CHECK(r1.seed == 12345);

  std::vector<double> pa(8), pb(8);
  for (std::size_t i = 0; i < 8; ++i) {
    pa[i] = gauss(rng) + 0.2;
    pb[i] = gauss(rng);
  }
  const auto p1 = lfe::fisher_pitman(pa, pb, true, 20001, 99, 1);
  const auto p6 = lfe::fisher_pitman(pa, pb, true, 20001, 99, 6);
  CHECK(p1.p_value == p6.p_value);

  // The add-one estimator can never report 0.
  CHECK(r1.p_value > 0.0);
  CHECK(p1.p_value > 0.0);
}

TEST_CASE("permutation test validates its inputs") {
  const std::vector<double> some = {1.0, 2.0};
  check_raises(lfe::ErrorCode::kEmptyGroup, "non-empty",
               [&] { lfe::fisher_pitman({}, some, false, 100, 0); });
  check_raises(lfe::ErrorCode::kEmptyGroup, "non-empty",
               [&] { lfe::fisher_pitman(some, {}, true, 100, 0); });
  check_raises(lfe::ErrorCode::kLengthMismatch, "2 vs 3", [&] {
    lfe::fisher_pitman(some, {1.0, 2.0, 3.0}, true, 100, 0);
  });
  check_raises(lfe::ErrorCode::kInvalidSpec, "positive",
               [&] { lfe::fisher_pitman(some, some, false, 0, 0); });
}

TEST_CASE("bonferroni flags p-values at the corrected level") {
  // 4 tests at alpha 0.05: the corrected threshold is 0.0125, inclusive.
  const std::vector<bool> got =
      lfe::bonferroni({0.012, 0.0125, 0.013, 1.0}, 0.05);
  REQUIRE(got.size() == 4);
  CHECK(got[0]);
  CHECK(got[1]);
  CHECK_FALSE(got[2]);
  CHECK_FALSE(got[3]);

  const std::vector<bool> single = lfe::bonferroni({0.049}, 0.05);
  CHECK(single[0]);

  check_raises(lfe::ErrorCode::kInvalidSpec, "no p-values",
               [] { lfe::bonferroni({}, 0.05); });
  check_raises(lfe::ErrorCode::kInvalidSpec, "out of (0,1]",
               [] { lfe::bonferroni({0.5, 0.0}, 0.05); });
  check_raises(lfe::ErrorCode::kInvalidSpec, "out of (0,1]",
               [] { lfe::bonferroni({1.5}, 0.05); });
}

TEST_CASE("significance stars follow the corrected thresholds") {
  CHECK(lfe::significance_stars(0.004, 1) == "**");
  CHECK(lfe::significance_stars(0.005, 1) == "**");
  CHECK(lfe::significance_stars(0.0051, 1) == "*");
  CHECK(lfe::significance_stars(0.05, 1) == "*");
  CHECK(lfe::significance_stars(0.051, 1) == "");
  // 10 tests divide both thresholds by 10.
  CHECK(lfe::significance_stars(0.0004, 10) == "**");
  CHECK(lfe::significance_stars(0.004, 10) == "*");
  CHECK(lfe::significance_stars(0.006, 10) == "");
}

TEST_CASE("bootstrap CI brackets the pooled mean and collapses when constant") {
  std::map<std::string, std::vector<double>> values;
  std::mt19937_64 rng(55);
  std::normal_distribution<double> gauss(10.0, 2.0);
  double total = 0.0;
  std::size_t count = 0;
  for (int u = 0; u < 8; ++u) {
    std::vector<double> v(3 + u % 3);
    for (double& x : v) {
      x = gauss(rng);
      total += x;
      ++count;
    }
    values["lang" + std::to_string(u)] = v;
  }
  const double pooled_mean = total / static_cast<double>(count);

  const lfe::BootstrapCI ci =
      lfe::bootstrap_mean_ci(values, 0.95, 4000, 17, "language");
  CHECK(ci.lo <= ci.hi);
  CHECK(ci.lo <= pooled_mean);
  CHECK(ci.hi >= pooled_mean);
  CHECK(ci.level == 0.95);
  CHECK(ci.n_resamples == 4000);
  CHECK(ci.seed == 17);
  CHECK(ci.unit == "language");

  // Same seed reproduces; the replicate set is resample-indexed, not
  // thread-scheduled.
  const lfe::BootstrapCI again =
      lfe::bootstrap_mean_ci(values, 0.95, 4000, 17, "language");
  CHECK(ci.lo == again.lo);
  CHECK(ci.hi == again.hi);

  // All values identical: every replicate equals that constant.
  std::map<std::string, std::vector<double>> flat = {
      {"a", {3.25, 3.25}}, {"b", {3.25}}, {"c", {3.25, 3.25, 3.25}}};
  const lfe::BootstrapCI degenerate =
      lfe::bootstrap_mean_ci(flat, 0.9, 500, 0);
  CHECK(degenerate.lo == 3.25);
  CHECK(degenerate.hi == 3.25);
  CHECK(degenerate.unit == "language");
}

TEST_CASE("bootstrap CI stays within the span of unit means") {
  // Replicates are means over resampled units, so the CI cannot leave the
  // convex hull of the per-unit means.
  std::map<std::string, std::vector<double>> values = {
      {"u1", {1.0, 1.0}}, {"u2", {2.0}}, {"u3", {5.0, 5.0, 5.0}}};
  const lfe::BootstrapCI ci = lfe::bootstrap_mean_ci(values, 0.99, 3000, 9);
  CHECK(ci.lo >= 1.0 - 1e-12);
  CHECK(ci.hi <= 5.0 + 1e-12);
}

TEST_CASE("bootstrap CI validates its inputs") {
  std::map<std::string, std::vector<double>> one = {{"a", {1.0}}};
  check_raises(lfe::ErrorCode::kTooFewUnits, "at least 2",
               [&] { lfe::bootstrap_mean_ci(one, 0.95, 100, 0); });
  std::map<std::string, std::vector<double>> values = {{"a", {1.0}},
                                                       {"b", {2.0}}};
  check_raises(lfe::ErrorCode::kInvalidSpec, "confidence level",
               [&] { lfe::bootstrap_mean_ci(values, 1.0, 100, 0); });
  check_raises(lfe::ErrorCode::kInvalidSpec, "confidence level",
               [&] { lfe::bootstrap_mean_ci(values, 0.0, 100, 0); });
  check_raises(lfe::ErrorCode::kInvalidSpec, "positive",
               [&] { lfe::bootstrap_mean_ci(values, 0.95, 0, 0); });
  std::map<std::string, std::vector<double>> holed = {{"a", {1.0}},
                                                      {"empty", {}}};
  check_raises(lfe::ErrorCode::kEmptyGroup, "empty",
               [&] { lfe::bootstrap_mean_ci(holed, 0.95, 100, 0); });
}

namespace {

lfe::LfeScore pair_score(const std::string& a, const std::string& b,
                         double lfe_percent) {
  lfe::LfeScore s;
  s.language_a = a;
  s.language_b = b;
  s.lfe_percent = lfe_percent;
  return s;
}

}  // namespace

TEST_CASE("family contrast splits pairs by family and reports group stats") {
  // Families: {a, b} and {c, d}.  Same-family pairs (a,b) and (c,d); the
  // four cross pairs are different-family.
  const std::map<std::string, std::string> families = {
      {"a", "west"}, {"b", "west"}, {"c", "east"}, {"d", "east"}};
  const std::vector<lfe::LfeScore> scores = {
      pair_score("a", "b", 10.0), pair_score("c", "d", 20.0),
      pair_score("a", "c", 30.0), pair_score("a", "d", 40.0),
      pair_score("b", "c", 50.0), pair_score("b", "d", 60.0)};

  const lfe::FamilyContrast got =
      lfe::family_contrast(scores, families, 0.95, 4000, 3);
  CHECK(got.same_n == 2);
  CHECK(got.diff_n == 4);
  CHECK(got.same_mean == doctest::Approx(15.0));
  CHECK(got.diff_mean == doctest::Approx(45.0));
  CHECK(got.same_sd == doctest::Approx(std::sqrt(50.0)));
  CHECK(got.diff_sd == doctest::Approx(std::sqrt(500.0 / 3.0)));

  // Every replicate difference lies in [30-20, 60-10]; the interval must
  // straddle the observed difference of 30 and stay inside that range.
  CHECK(got.difference_ci.lo >= 10.0 - 1e-9);
  CHECK(got.difference_ci.hi <= 50.0 + 1e-9);
  CHECK(got.difference_ci.lo <= 30.0);
  CHECK(got.difference_ci.hi >= 30.0);
  CHECK(got.difference_ci.unit == "language-within-family");
  CHECK(got.difference_ci.level == 0.95);

  const lfe::FamilyContrast again =
      lfe::family_contrast(scores, families, 0.95, 4000, 3);
  CHECK(got.difference_ci.lo == again.difference_ci.lo);
  CHECK(got.difference_ci.hi == again.difference_ci.hi);
}

TEST_CASE("family contrast raises on missing labels and missing contrast") {
  const std::map<std::string, std::string> families = {{"a", "west"},
                                                       {"b", "west"}};
  check_raises(lfe::ErrorCode::kEmptyGroup, "no pair scores",
               [&] { lfe::family_contrast({}, families, 0.95, 100, 0); });
  check_raises(lfe::ErrorCode::kMissingFamilyLabel, "zz", [&] {
    lfe::family_contrast({pair_score("a", "zz", 1.0)}, families, 0.95, 100, 0);
  });
  check_raises(lfe::ErrorCode::kMissingContrast, "same-family", [&] {
    lfe::family_contrast({pair_score("a", "b", 1.0)}, families, 0.95, 100, 0);
  });
}
