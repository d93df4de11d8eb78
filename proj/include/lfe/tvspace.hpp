// include/lfe/tvspace.hpp

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

// Total-variability modelling: every utterance supervector is m + T w with
// a standard normal prior on w; the posterior mean of w is the i-vector.

#ifndef LFE_TVSPACE_HPP_
#define LFE_TVSPACE_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lfe/ubm.hpp"

namespace lfe {

// Zeroth and centered first-order statistics of one utterance against the
// UBM: n_c = sum_t gamma_t(c), f_c = sum_t gamma_t(c) (x_t - m_c).
struct BaumWelchStats {
  std::string utterance_id;
  std::string speaker_id;
  Eigen::VectorXd n;  // K
  Eigen::MatrixXd f;  // K x D
};

BaumWelchStats accumulate_stats(const DiagGmm& ubm, const FeatureMatrix& feats,
                                const std::string& speaker_id);

struct TvModel {
  DiagGmm ubm;
  Eigen::MatrixXd t;  // (K*D) x R, component c owns rows [c*D, (c+1)*D)
  std::vector<double> train_log;

  int rank() const { return static_cast<int>(t.cols()); }
};

struct TvConfig {
  int rank = 150;
  int n_iterations = 5;
  std::uint64_t seed = 0;
  int n_threads = 1;
};

// EM over the utterance statistics, starting from a seeded random subspace.
// Needs rank < K*D and at least rank utterances.  train_log records the mean
// per-utterance objective 0.5*(b'w - log|L|) measured at the start of each
// iteration (the parts of the marginal log-likelihood that depend on T),
// which EM makes non-decreasing.
TvModel train_tv(const DiagGmm& ubm, const std::vector<BaumWelchStats>& stats,
                 const TvConfig& cfg);

// Posterior mean of w for one utterance: (I + sum_c n_c G_c)^{-1} T'Sigma^{-1}f.
Eigen::VectorXd extract_ivector(const TvModel& model,
                                const BaumWelchStats& stats);

// Caches the per-component R x R Gram terms so repeated extraction is cheap.
class TvExtractor {
 public:
  explicit TvExtractor(const TvModel& model);

  Eigen::VectorXd extract(const BaumWelchStats& stats) const;

 private:
  const TvModel* model_;
  std::vector<Eigen::MatrixXd> gram_;  // K of R x R
  Eigen::MatrixXd t_over_var_;         // (K*D) x R
};

// One scored utterance in a train-language/test-language condition.
struct IvectorRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::string test_language;
  std::string train_language;
  Eigen::VectorXf w;
};

struct IvectorSet {
  std::uint32_t rank = 0;
  std::vector<IvectorRecord> records;
};

// Extracts i-vectors for a batch of utterances; record order follows the
// input order regardless of thread count.
IvectorSet extract_ivectors(const TvModel& model,
                            const std::vector<BaumWelchStats>& stats,
                            const std::string& test_language,
                            const std::string& train_language,
                            int n_threads = 1);

// Subspace model files: magic "LFET", version u16, K u32, D u32, R u32, the
// UBM parameter block, then T as row-major little-endian float64.
void write_tv(const std::filesystem::path& path, const TvModel& model);
TvModel read_tv(const std::filesystem::path& path);

// I-vector set files: magic "LFEI", version u16, count u32, R u32, then per
// record the four id strings and R little-endian float32 values.
void write_ivectors(const std::filesystem::path& path, const IvectorSet& set);
IvectorSet read_ivectors(const std::filesystem::path& path);

}  // namespace lfe

#endif  // LFE_TVSPACE_HPP_
