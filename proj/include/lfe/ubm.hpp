// include/lfe/ubm.hpp

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

#ifndef LFE_UBM_HPP_
#define LFE_UBM_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lfe/features.hpp"
#include "lfe/io.hpp"

namespace lfe {

// Gaussian mixture with diagonal covariances.  After training, weights sum
// to 1 with every weight >= 1e-8, and every variance sits at or above 1e-3
// of the global per-dimension data variance.
struct DiagGmm {
  Eigen::VectorXd weights;        // K
  Eigen::MatrixXd means;          // K x D
  Eigen::MatrixXd vars;           // K x D
  std::vector<double> train_log;  // mean per-frame log-likelihood by iteration

  int n_components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }
};

// k-means++ seeding plus at most 10 Lloyd iterations on a subsample of at
// most 1M frames; weights come out uniform and variances are the floored
// within-cluster variances.  Requires at least 10 frames per component.
DiagGmm init_kmeans(const FloatRowMat& frames, int n_components,
                    std::uint64_t seed, int n_threads = 1);

// n_iterations of EM from the given starting point.  train_log receives the
// mean per-frame log-likelihood measured at the start of each iteration,
// which EM makes non-decreasing.  Components whose soft count falls below
// 1e-4 of the frame count are re-seeded at the lowest-likelihood frames.
// A positive convergence_tol stops early once the gain drops below it.
DiagGmm em_fit(const DiagGmm& init, const FloatRowMat& frames,
               int n_iterations, int n_threads = 1,
               double convergence_tol = 0.0);

struct UbmConfig {
  int n_components = 128;
  int max_iterations = 20;
  double convergence_tol = 1e-4;  // stop when mean LL gains less than this
  std::uint64_t seed = 0;
  int n_threads = 1;
};

// init_kmeans followed by em_fit.
DiagGmm train_ubm(const FloatRowMat& frames, const UbmConfig& cfg);

// frames x K matrix of log w_c + log N(x_t | m_c, v_c).
Eigen::MatrixXd component_log_likelihoods(const DiagGmm& g,
                                          const FloatRowMat& frames);

// Row-wise logsumexp of the above, averaged over frames.
double mean_log_likelihood(const DiagGmm& g, const FloatRowMat& frames);

// Posterior responsibilities (softmax of component log-likelihoods per row);
// returns the mean per-frame log-likelihood.
double frame_posteriors(const DiagGmm& g, const FloatRowMat& frames,
                        Eigen::MatrixXd* resp);

// Mixture files: magic "LFEG", version u16, K u32, D u32, then weights,
// means, variances and the training log as little-endian float64.
void write_gmm(const std::filesystem::path& path, const DiagGmm& g);
DiagGmm read_gmm(const std::filesystem::path& path);

// Parameter block shared by the mixture file and the subspace model file:
// weights, row-major means and variances, training log.
void write_gmm_fields(BinaryWriter& w, const DiagGmm& g);
DiagGmm read_gmm_fields(BinaryReader& r, int k, int d);

}  // namespace lfe

#endif  // LFE_UBM_HPP_
