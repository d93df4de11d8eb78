// tests/test_ubm.cpp

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

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "lfe/common.hpp"
#include "lfe/ubm.hpp"

namespace fs = std::filesystem;
using namespace lfe;

namespace {

// Draws n frames from a diagonal Gaussian mixture.
FloatRowMat sample_mixture(const Eigen::MatrixXd& means,
                           const Eigen::MatrixXd& vars,
                           const Eigen::VectorXd& weights, int n,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(weights.data(),
                                       weights.data() + weights.size());
  FloatRowMat x(n, means.cols());
  for (int t = 0; t < n; ++t) {
    const int c = pick(rng);
    for (int j = 0; j < means.cols(); ++j)
      x(t, j) = static_cast<float>(means(c, j) +
                                   std::sqrt(vars(c, j)) * normal01(rng));
  }
  return x;
}

FloatRowMat gaussian_frames(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FloatRowMat x(n, d);
  for (int t = 0; t < n; ++t)
    for (int j = 0; j < d; ++j) x(t, j) = static_cast<float>(normal01(rng));
  return x;
}

// Mean per-frame mixture log-likelihood the slow way: explicit loops and a
// per-frame logsumexp.
double naive_mean_ll(const DiagGmm& g, const FloatRowMat& frames) {
  const int k = g.n_components(), d = g.dim();
  double total = 0.0;
  for (int t = 0; t < frames.rows(); ++t) {
    std::vector<double> lls(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      double ll = std::log(g.weights[c]);
      for (int j = 0; j < d; ++j) {
        const double diff = static_cast<double>(frames(t, j)) - g.means(c, j);
        ll += -0.5 * std::log(2.0 * M_PI * g.vars(c, j)) -
              diff * diff / (2.0 * g.vars(c, j));
      }
      lls[static_cast<std::size_t>(c)] = ll;
    }
    const double m = *std::max_element(lls.begin(), lls.end());
    double sum = 0.0;
    for (double v : lls) sum += std::exp(v - m);
    total += m + std::log(sum);
  }
  return total / static_cast<double>(frames.rows());
}

}  // namespace

TEST_CASE("component log-likelihoods match the closed form") {
  DiagGmm g;
  g.weights = Eigen::Vector2d(0.25, 0.75);
  g.means = Eigen::MatrixXd{{0.0, 1.0}, {2.0, -1.0}};
  g.vars = Eigen::MatrixXd{{1.0, 4.0}, {0.5, 2.0}};
  const auto frames = gaussian_frames(40, 2, 1);

  const Eigen::MatrixXd ll = component_log_likelihoods(g, frames);
  REQUIRE(ll.rows() == 40);
  REQUIRE(ll.cols() == 2);
  for (int t = 0; t < 40; ++t) {
    for (int c = 0; c < 2; ++c) {
      double expect = std::log(g.weights[c]);
      for (int j = 0; j < 2; ++j) {
        const double diff = static_cast<double>(frames(t, j)) - g.means(c, j);
        expect += -0.5 * std::log(2.0 * M_PI * g.vars(c, j)) -
                  diff * diff / (2.0 * g.vars(c, j));
      }
      CHECK(ll(t, c) == doctest::Approx(expect).epsilon(1e-6));
    }
  }
  CHECK(mean_log_likelihood(g, frames) ==
        doctest::Approx(naive_mean_ll(g, frames)).epsilon(1e-10));
}

TEST_CASE("posteriors are normalized and Bayes-consistent") {
  DiagGmm g;
  g.weights = Eigen::Vector3d(0.2, 0.5, 0.3);
  g.means = Eigen::MatrixXd{{-3.0}, {0.0}, {3.0}};
  g.vars = Eigen::MatrixXd{{1.0}, {1.0}, {1.0}};
  const auto frames = gaussian_frames(30, 1, 2);

  Eigen::MatrixXd resp;
  frame_posteriors(g, frames, &resp);
  REQUIRE(resp.rows() == 30);
  for (int t = 0; t < 30; ++t) {
    CHECK(resp.row(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(resp.row(t).minCoeff() >= 0.0);
  }
  // A frame far to the right belongs to the rightmost component.
  FloatRowMat far(1, 1);
  far(0, 0) = 3.5f;
  frame_posteriors(g, far, &resp);
  CHECK(resp(0, 2) > 0.9);
}

TEST_CASE("kmeans initialization lands near well-separated centers") {
  Eigen::MatrixXd means{{-6.0, 0.0}, {0.0, 6.0}, {6.0, -6.0}};
  Eigen::MatrixXd vars = Eigen::MatrixXd::Constant(3, 2, 0.05);
  Eigen::Vector3d weights(1.0 / 3, 1.0 / 3, 1.0 / 3);
  const auto frames = sample_mixture(means, vars, weights, 900, 5);

  const DiagGmm g = init_kmeans(frames, 3, 7);
  // Every true center has a learned mean within 0.5.
  for (int c = 0; c < 3; ++c) {
    double best = 1e9;
    for (int l = 0; l < 3; ++l)
      best = std::min(best,
                      (g.means.row(l) - means.row(c)).norm());
    CHECK(best < 0.5);
  }
  CHECK(g.weights.sum() == doctest::Approx(1.0));
  CHECK(g.vars.minCoeff() > 0.0);
}

TEST_CASE("kmeans input validation") {
  const auto frames = gaussian_frames(25, 2, 3);
  CHECK_THROWS_AS(init_kmeans(frames, 0, 1), LfeError);
  try {
    init_kmeans(frames, 3, 1);  // needs 30 frames for 3 components
    FAIL("expected too-few-frames");
  } catch (const LfeError& e) {
    CHECK(e.code() == ErrorCode::kTooFewFrames);
  }
}

TEST_CASE("kmeans rejects non-finite frames") {
  auto frames = gaussian_frames(50, 2, 4);
  frames(10, 1) = std::numeric_limits<float>::quiet_NaN();
  try {
    init_kmeans(frames, 2, 1);
    FAIL("expected a numerical failure");
  } catch (const LfeError& e) {
    CHECK(e.code() == ErrorCode::kNumericalFailure);
  }
}

TEST_CASE("EM raises the likelihood over the initialization") {
  Eigen::MatrixXd means{{-2.0, 0.0}, {2.0, 1.0}};
  Eigen::MatrixXd vars{{0.5, 1.0}, {1.5, 0.3}};
  Eigen::Vector2d weights(0.4, 0.6);
  const auto frames = sample_mixture(means, vars, weights, 2000, 9);

  const DiagGmm init = init_kmeans(frames, 2, 1);
  const DiagGmm fit = em_fit(init, frames, 10);
  CHECK(mean_log_likelihood(fit, frames) >=
        mean_log_likelihood(init, frames) - 1e-9);
  REQUIRE(fit.train_log.size() == 10);
  for (std::size_t i = 1; i < fit.train_log.size(); ++i)
    CHECK(fit.train_log[i] >=
          fit.train_log[i - 1] - 1e-8 * std::abs(fit.train_log[i - 1]));
}

TEST_CASE("EM recovers mixture parameters on easy data") {
  Eigen::MatrixXd means{{-4.0}, {4.0}};
  Eigen::MatrixXd vars{{1.0}, {0.25}};
  Eigen::Vector2d weights(0.3, 0.7);
  const auto frames = sample_mixture(means, vars, weights, 20000, 13);

  const DiagGmm g = train_ubm(frames, {.n_components = 2,
                                       .max_iterations = 30,
                                       .convergence_tol = 0.0,
                                       .seed = 3,
                                       .n_threads = 1});
  // Components may come out in either order.
  const int lo = g.means(0, 0) < g.means(1, 0) ? 0 : 1;
  const int hi = 1 - lo;
  CHECK(g.means(lo, 0) == doctest::Approx(-4.0).epsilon(0.05));
  CHECK(g.means(hi, 0) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(g.vars(lo, 0) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(g.vars(hi, 0) == doctest::Approx(0.25).epsilon(0.1));
  CHECK(g.weights[lo] == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("convergence tolerance stops EM early") {
  const auto frames = sample_mixture(Eigen::MatrixXd{{-3.0}, {3.0}},
                                     Eigen::MatrixXd{{1.0}, {1.0}},
                                     Eigen::Vector2d(0.5, 0.5), 5000, 21);
  const DiagGmm init = init_kmeans(frames, 2, 1);
  const DiagGmm full = em_fit(init, frames, 50, 1, 0.0);
  const DiagGmm early = em_fit(init, frames, 50, 1, 1e-3);
  CHECK(early.train_log.size() < full.train_log.size());
  // The early stop still reaches nearly the same likelihood.
  CHECK(mean_log_likelihood(early, frames) >
        mean_log_likelihood(full, frames) - 1e-2);
}

TEST_CASE("dimension mismatch between init and frames is rejected") {
  const auto frames2 = gaussian_frames(100, 2, 31);
  const auto frames3 = gaussian_frames(100, 3, 32);
  const DiagGmm init = init_kmeans(frames2, 2, 1);
  try {
    em_fit(init, frames3, 3);
    FAIL("expected a dimension mismatch");
  } catch (const LfeError& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
}

TEST_CASE("starved components are rescued, weights stay floored") {
  // 4 components forced onto a single tight cluster.
  const auto frames = sample_mixture(
      Eigen::MatrixXd{{0.0, 0.0}}, Eigen::MatrixXd{{0.01, 0.01}},
      Eigen::VectorXd::Ones(1), 400, 17);
  const DiagGmm g = train_ubm(frames, {.n_components = 4,
                                       .max_iterations = 15,
                                       .convergence_tol = 0.0,
                                       .seed = 5,
                                       .n_threads = 1});
  CHECK(g.weights.minCoeff() >= 1e-8);
  CHECK(g.weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g.means.allFinite());
  CHECK(g.vars.allFinite());
  CHECK(g.vars.minCoeff() > 0.0);
  for (double ll : g.train_log) CHECK(std::isfinite(ll));
}

TEST_CASE("near-constant dimensions stay numerically sound") {
  auto frames = gaussian_frames(500, 3, 19);
  for (int t = 0; t < frames.rows(); ++t) frames(t, 2) = 1.0f;
  const DiagGmm g = train_ubm(frames, {.n_components = 2,
                                       .max_iterations = 10,
                                       .convergence_tol = 0.0,
                                       .seed = 2,
                                       .n_threads = 1});
  CHECK(g.vars.col(2).minCoeff() > 0.0);
  CHECK(std::isfinite(mean_log_likelihood(g, frames)));
}

TEST_CASE("training is reproducible and thread-count tolerant") {
  const auto frames = sample_mixture(
      Eigen::MatrixXd{{-2.0, 1.0}, {2.0, -1.0}},
      Eigen::MatrixXd{{1.0, 0.5}, {0.5, 1.0}}, Eigen::Vector2d(0.5, 0.5),
      4000, 29);
  UbmConfig cfg{.n_components = 4,
                .max_iterations = 8,
                .convergence_tol = 0.0,
                .seed = 77,
                .n_threads = 1};
  const DiagGmm a = train_ubm(frames, cfg);
  const DiagGmm b = train_ubm(frames, cfg);
  // Same thread count: bit-identical.
  CHECK((a.means - b.means).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.vars - b.vars).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() == 0.0);

  cfg.n_threads = 4;
  const DiagGmm c = train_ubm(frames, cfg);
  const double scale = a.means.cwiseAbs().maxCoeff();
  CHECK((a.means - c.means).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + scale));
  CHECK((a.vars - c.vars).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + scale));
  CHECK((a.weights - c.weights).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("mixture file round-trip is exact") {
  const auto frames = gaussian_frames(200, 2, 37);
  DiagGmm g = train_ubm(frames, {.n_components = 2,
                                 .max_iterations = 5,
                                 .convergence_tol = 0.0,
                                 .seed = 1,
                                 .n_threads = 1});
  const fs::path dir =
      fs::temp_directory_path() /
      ("lfe_ubm_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  write_gmm(dir / "g.lfeg", g);
  const DiagGmm r = read_gmm(dir / "g.lfeg");
  CHECK((r.weights - g.weights).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r.means - g.means).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r.vars - g.vars).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(r.train_log.size() == g.train_log.size());
  for (std::size_t i = 0; i < g.train_log.size(); ++i)
    CHECK(r.train_log[i] == g.train_log[i]);
  fs::remove_all(dir);
}
